#include "colorfuse/colorize.hpp"

namespace colorfuse {

namespace {

std::size_t reflect_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  const std::size_t r = i % period;
  return r < n ? r : period - r;
}

}  // namespace

Plane input_luminance(const DecodedPng& input) {
  if (!input.grayscale) return srgb_to_lab(input.rgb).L;
  Plane L(input.rgb.width(), input.rgb.height());
  for (std::size_t i = 0; i < input.gray.size(); ++i) {
    L.values()[i] = static_cast<float>(input.gray[i] * (100.0 / 255.0));
  }
  return L;
}

std::size_t round_up_to_multiple_of_8(std::size_t n) {
  return (n + kDownsampleFactor - 1) / kDownsampleFactor * kDownsampleFactor;
}

Plane reflect_pad(const Plane& p, std::size_t width, std::size_t height) {
  if (p.width() == 0 || p.height() == 0) throw InputError("cannot pad an empty plane");
  if (width < p.width() || height < p.height()) throw InputError("padding cannot shrink a plane");
  Plane out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = reflect_index(y, p.height());
    for (std::size_t x = 0; x < width; ++x) out.at(x, y) = p.at(reflect_index(x, p.width()), sy);
  }
  return out;
}

LabImage colorize_luminance(const ModelParameters<float>& params, const Plane& luminance,
                            const Embedding& emb) {
  const std::size_t w = luminance.width(), h = luminance.height();
  if (w == 0 || h == 0) throw InputError("cannot colorize an empty image");

  Plane normalized(w, h);
  for (std::size_t i = 0; i < normalized.values().size(); ++i) {
    normalized.values()[i] = normalize_luminance(luminance.values()[i]);
  }
  const std::size_t pw = round_up_to_multiple_of_8(w), ph = round_up_to_multiple_of_8(h);
  const Plane padded = reflect_pad(normalized, pw, ph);

  Graph<float> g(GradMode::disabled);
  const Tensor<float> ab = model_forward(g, plane_tensor(padded), emb, params);

  LabImage lab{luminance, Plane(w, h), Plane(w, h)};
  auto pred = ab.data();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      lab.a.at(x, y) = static_cast<float>(pred[y * pw + x] * kChromaRange);
      lab.b.at(x, y) = static_cast<float>(pred[ph * pw + y * pw + x] * kChromaRange);
    }
  }
  return lab;
}

RgbImage colorize(const ModelParameters<float>& params, const DecodedPng& input,
                  const Embedding* embedding) {
  const Plane L = input_luminance(input);
  if (embedding) return lab_to_srgb(colorize_luminance(params, L, *embedding));

  Plane normalized(L.width(), L.height());
  for (std::size_t i = 0; i < normalized.values().size(); ++i) {
    normalized.values()[i] = normalize_luminance(L.values()[i]);
  }
  return lab_to_srgb(colorize_luminance(params, L, stub_embedding(normalized)));
}

}  // namespace colorfuse
