#include <map>
#include <optional>

#include "binary_io.hpp"
#include "colorfuse/model.hpp"

namespace colorfuse {

namespace {
constexpr std::string_view kMagic = "KOAL";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParameters<float>& p) {
  const auto names = ModelParameters<float>::tensor_names();
  const auto tensors = p.tensors();
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.u16(static_cast<std::uint16_t>(names[i].size()));
    w.raw(names[i]);
    w.u8(static_cast<std::uint8_t>(tensors[i].rank()));
    for (std::size_t d : tensors[i].shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : tensors[i].data()) w.f32(v);
  }
  return w.bytes();
}

void save_checkpoint(const ModelParameters<float>& p, const std::filesystem::path& path) {
  detail::write_file(path, serialize_checkpoint(p));
}

ModelParameters<float> load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  const std::string& src = r.source();
  if (r.raw(kMagic.size(), "magic") != kMagic) {
    throw FormatError(src + ": bad magic, not a KOAL checkpoint");
  }
  if (const auto version = r.u32("version"); version != kVersion) {
    throw FormatError(src + ": unsupported version " + std::to_string(version));
  }

  const auto names = ModelParameters<float>::tensor_names();
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < names.size(); ++i) slot.emplace(names[i], i);

  const std::uint32_t count = r.u32("tensor count");
  std::vector<std::optional<Tensor<float>>> found(names.size());
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint16_t name_len = r.u16("tensor name length");
    const std::string name = r.raw(name_len, "tensor name");
    const auto it = slot.find(name);
    if (it == slot.end()) throw FormatError(src + ": unknown tensor '" + name + "'");
    if (found[it->second]) throw FormatError(src + ": duplicate tensor '" + name + "'");

    const std::uint8_t rank = r.u8("rank of " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("dimensions of " + name);
    const Shape expected = ModelParameters<float>::expected_shape(it->second);
    if (shape != expected) {
      throw FormatError(src + ": shape mismatch for '" + name + "': expected " +
                        to_string(expected) + ", got " + to_string(shape));
    }
    std::vector<float> values(element_count(shape));
    for (auto& v : values) v = r.f32("payload of " + name);
    found[it->second] = Tensor<float>::from_data(shape, std::move(values), true);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!found[i]) throw FormatError(src + ": missing tensor '" + names[i] + "'");
  }
  if (r.remaining() != 0) throw FormatError(src + ": trailing bytes after last tensor");

  std::vector<ModelParameters<float>::Layer> layers;
  for (std::size_t i = 0; i < names.size(); i += 2) layers.push_back({*found[i], *found[i + 1]});
  return ModelParameters<float>(std::move(layers));
}

}  // namespace colorfuse
