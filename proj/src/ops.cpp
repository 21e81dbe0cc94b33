#include "colorfuse/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace colorfuse {

SamePadding same_padding(std::size_t input, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0) throw ContractError("stride and kernel size must be positive");
  SamePadding p;
  p.output = (input + stride - 1) / stride;
  const std::size_t needed = (p.output == 0 ? 0 : (p.output - 1) * stride) + kernel;
  const std::size_t total = needed > input ? needed - input : 0;
  p.before = total / 2;
  p.after = total - p.before;
  return p;
}

namespace ops {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Upper bound on im2col buffer elements; larger outputs are processed in
// bands of output rows.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

struct ConvGeometry {
  std::size_t in_channels, in_h, in_w;
  std::size_t out_channels, kernel, stride;
  SamePadding pad_y, pad_x;

  std::size_t out_h() const { return pad_y.output; }
  std::size_t out_w() const { return pad_x.output; }
  std::size_t patch() const { return in_channels * kernel * kernel; }
  bool is_pointwise() const { return kernel == 1 && stride == 1; }
  std::size_t rows_per_band() const {
    const std::size_t per_row = std::max<std::size_t>(1, patch() * out_w());
    return std::clamp<std::size_t>(kColumnBudget / per_row, 1, std::max<std::size_t>(out_h(), 1));
  }
};

// Fills col[(c,ky,kx), (oy-row0, ox)] for output rows [row0, row1).
template <typename T>
void im2col(const T* x, const ConvGeometry& geo, std::size_t row0, std::size_t row1, T* col) {
  const std::size_t ow = geo.out_w();
  const std::size_t ncols = (row1 - row0) * ow;
  const auto k = geo.kernel;
  const auto s = static_cast<std::ptrdiff_t>(geo.stride);
  const auto ih = static_cast<std::ptrdiff_t>(geo.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(geo.in_w);
  for (std::size_t c = 0; c < geo.in_channels; ++c) {
    const T* plane = x + c * geo.in_h * geo.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* dst = col + ((c * k + ky) * k + kx) * ncols;
        for (std::size_t oy = row0; oy < row1; ++oy) {
          T* out_row = dst + (oy - row0) * ow;
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s +
                                    static_cast<std::ptrdiff_t>(ky) -
                                    static_cast<std::ptrdiff_t>(geo.pad_y.before);
          if (iy < 0 || iy >= ih) {
            std::fill(out_row, out_row + ow, T{0});
            continue;
          }
          const T* in_row = plane + iy * iw;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * s +
                                      static_cast<std::ptrdiff_t>(kx) -
                                      static_cast<std::ptrdiff_t>(geo.pad_x.before);
            out_row[ox] = (ix >= 0 && ix < iw) ? in_row[ix] : T{0};
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters col back into dx (accumulating).
template <typename T>
void col2im(const T* col, const ConvGeometry& geo, std::size_t row0, std::size_t row1, T* dx) {
  const std::size_t ow = geo.out_w();
  const std::size_t ncols = (row1 - row0) * ow;
  const auto k = geo.kernel;
  const auto s = static_cast<std::ptrdiff_t>(geo.stride);
  const auto ih = static_cast<std::ptrdiff_t>(geo.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(geo.in_w);
  for (std::size_t c = 0; c < geo.in_channels; ++c) {
    T* plane = dx + c * geo.in_h * geo.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* src = col + ((c * k + ky) * k + kx) * ncols;
        for (std::size_t oy = row0; oy < row1; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s +
                                    static_cast<std::ptrdiff_t>(ky) -
                                    static_cast<std::ptrdiff_t>(geo.pad_y.before);
          if (iy < 0 || iy >= ih) continue;
          const T* src_row = src + (oy - row0) * ow;
          T* in_row = plane + iy * iw;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * s +
                                      static_cast<std::ptrdiff_t>(kx) -
                                      static_cast<std::ptrdiff_t>(geo.pad_x.before);
            if (ix >= 0 && ix < iw) in_row[ix] += src_row[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename T>
void require_rank3(const Tensor<T>& t, const char* op) {
  if (t.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected [C,H,W], got " + to_string(t.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Graph<T>& g, const Tensor<T>& input, const Tensor<T>& kernels,
                 const Tensor<T>& bias, std::size_t stride) {
  require_rank3(input, "conv2d");
  if (kernels.rank() != 4 || kernels.dim(2) != kernels.dim(3)) {
    throw ShapeError("conv2d: kernels must be [C_out,C_in,k,k], got " + to_string(kernels.shape()));
  }
  if (kernels.dim(2) % 2 == 0) {
    throw ShapeError("conv2d: kernel size must be odd, got " + std::to_string(kernels.dim(2)));
  }
  if (kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(0)) +
                     " channels but kernels expect " + std::to_string(kernels.dim(1)));
  }
  if (bias.size() != kernels.dim(0)) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) + " for " +
                     std::to_string(kernels.dim(0)) + " kernels");
  }
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  if (input.dim(1) == 0 || input.dim(2) == 0) throw ShapeError("conv2d: empty spatial input");

  const ConvGeometry geo{input.dim(0),   input.dim(1),
                         input.dim(2),   kernels.dim(0),
                         kernels.dim(2), stride,
                         same_padding(input.dim(1), kernels.dim(2), stride),
                         same_padding(input.dim(2), kernels.dim(2), stride)};
  const std::size_t oh = geo.out_h(), ow = geo.out_w();
  const std::size_t npix = oh * ow;

  Tensor<T> out = g.make_output(Shape{geo.out_channels, oh, ow}, {&input, &kernels, &bias});
  MatrixMap<T> out_m(out.mutable_data().data(), geo.out_channels, npix);
  ConstMatrixMap<T> k_m(kernels.data().data(), geo.out_channels, geo.patch());

  if (geo.is_pointwise()) {
    ConstMatrixMap<T> x_m(input.data().data(), geo.in_channels, npix);
    out_m.noalias() = k_m * x_m;
  } else {
    const std::size_t band = geo.rows_per_band();
    std::vector<T> col(geo.patch() * band * ow);
    for (std::size_t r0 = 0; r0 < oh; r0 += band) {
      const std::size_t r1 = std::min(oh, r0 + band);
      const std::size_t ncols = (r1 - r0) * ow;
      im2col(input.data().data(), geo, r0, r1, col.data());
      ConstMatrixMap<T> col_m(col.data(), geo.patch(), ncols);
      out_m.middleCols(r0 * ow, ncols).noalias() = k_m * col_m;
    }
  }
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b_v(bias.data().data(), geo.out_channels);
  out_m.colwise() += b_v;

  g.record("conv2d", {input, kernels, bias}, out, [input, kernels, bias, geo](const Tensor<T>& o) {
    const std::size_t npix = geo.out_h() * geo.out_w();
    ConstMatrixMap<T> dout(o.grad().data(), geo.out_channels, npix);
    ConstMatrixMap<T> k_m(kernels.data().data(), geo.out_channels, geo.patch());

    if (bias.requires_grad()) {
      // Plain loop: Eigen's vectorized reductions peel by address, so sums
      // would depend on where the allocator put the gradient buffer.
      std::vector<T> db(geo.out_channels, T{0});
      for (std::size_t p = 0; p < npix; ++p)
        for (std::size_t c = 0; c < geo.out_channels; ++c) db[c] += dout(c, p);
      Tensor<T>(bias).accumulate_grad(db);
    }

    const bool want_k = kernels.requires_grad();
    const bool want_x = input.requires_grad();
    if (!want_k && !want_x) return;

    std::vector<T> dk(want_k ? geo.out_channels * geo.patch() : 0, T{0});
    std::vector<T> dx(want_x ? input.size() : 0, T{0});
    MatrixMap<T> dk_m(dk.data(), want_k ? geo.out_channels : 0, geo.patch());

    if (geo.is_pointwise()) {
      ConstMatrixMap<T> x_m(input.data().data(), geo.in_channels, npix);
      if (want_k) dk_m.noalias() += dout * x_m.transpose();
      if (want_x) {
        MatrixMap<T>(dx.data(), geo.in_channels, npix).noalias() = k_m.transpose() * dout;
      }
    } else {
      const std::size_t ow = geo.out_w();
      const std::size_t band = geo.rows_per_band();
      std::vector<T> col(geo.patch() * band * ow);
      for (std::size_t r0 = 0; r0 < geo.out_h(); r0 += band) {
        const std::size_t r1 = std::min(geo.out_h(), r0 + band);
        const std::size_t ncols = (r1 - r0) * ow;
        auto dout_band = dout.middleCols(r0 * ow, ncols);
        if (want_k) {
          im2col(input.data().data(), geo, r0, r1, col.data());
          ConstMatrixMap<T> col_m(col.data(), geo.patch(), ncols);
          dk_m.noalias() += dout_band * col_m.transpose();
        }
        if (want_x) {
          MatrixMap<T> dcol(col.data(), geo.patch(), ncols);
          dcol.noalias() = k_m.transpose() * dout_band;
          col2im(col.data(), geo, r0, r1, dx.data());
        }
      }
    }
    if (want_k) Tensor<T>(kernels).accumulate_grad(dk);
    if (want_x) Tensor<T>(input).accumulate_grad(dx);
  });
  return out;
}

template <typename T>
Tensor<T> relu(Graph<T>& g, const Tensor<T>& x) {
  Tensor<T> out = g.make_output(x.shape(), {&x});
  auto src = x.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
  g.record("relu", {x}, out, [x](const Tensor<T>& o) {
    auto up = o.grad();
    auto in = x.data();
    std::vector<T> dx(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) dx[i] = in[i] > T{0} ? up[i] : T{0};
    Tensor<T>(x).accumulate_grad(dx);
  });
  return out;
}

template <typename T>
Tensor<T> tanh_act(Graph<T>& g, const Tensor<T>& x) {
  Tensor<T> out = g.make_output(x.shape(), {&x});
  auto src = x.data();
  auto dst = out.mutable_data();
  // tanh rounds to exactly +-1 in float beyond |x| ~ 9; keep the open interval.
  const T bound = std::nextafter(T{1}, T{0});
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp(std::tanh(src[i]), -bound, bound);
  g.record("tanh", {x}, out, [x](const Tensor<T>& o) {
    auto up = o.grad();
    auto y = o.data();
    std::vector<T> dx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = up[i] * (T{1} - y[i] * y[i]);
    Tensor<T>(x).accumulate_grad(dx);
  });
  return out;
}

template <typename T>
Tensor<T> upsample_nearest2x(Graph<T>& g, const Tensor<T>& x) {
  require_rank3(x, "upsample_nearest2x");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<T> out = g.make_output(Shape{c, 2 * h, 2 * w}, {&x});
  auto src = x.data();
  auto dst = out.mutable_data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < 2 * h; ++y) {
      const T* srow = src.data() + (ch * h + y / 2) * w;
      T* drow = dst.data() + (ch * 2 * h + y) * 2 * w;
      for (std::size_t xx = 0; xx < 2 * w; ++xx) drow[xx] = srow[xx / 2];
    }
  }
  g.record("upsample_nearest2x", {x}, out, [x, c, h, w](const Tensor<T>& o) {
    auto up = o.grad();
    std::vector<T> dx(x.size(), T{0});
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < 2 * h; ++y) {
        const T* urow = up.data() + (ch * 2 * h + y) * 2 * w;
        T* drow = dx.data() + (ch * h + y / 2) * w;
        for (std::size_t xx = 0; xx < 2 * w; ++xx) drow[xx / 2] += urow[xx];
      }
    }
    Tensor<T>(x).accumulate_grad(dx);
  });
  return out;
}

template <typename T>
Tensor<T> concat_depth(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_rank3(a, "concat_depth");
  require_rank3(b, "concat_depth");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ShapeError("concat_depth: spatial mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  Tensor<T> out = g.make_output(Shape{a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, {&a, &b});
  auto dst = out.mutable_data();
  std::copy(a.data().begin(), a.data().end(), dst.begin());
  std::copy(b.data().begin(), b.data().end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
  g.record("concat_depth", {a, b}, out, [a, b](const Tensor<T>& o) {
    auto up = o.grad();
    if (a.requires_grad()) Tensor<T>(a).accumulate_grad(up.first(a.size()));
    if (b.requires_grad()) Tensor<T>(b).accumulate_grad(up.subspan(a.size()));
  });
  return out;
}

template <typename T>
Tensor<T> tile_spatial(Graph<T>& g, const Tensor<T>& v, std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw ShapeError("tile_spatial: target size must be positive");
  const std::size_t d = v.size();
  Tensor<T> out = g.make_output(Shape{d, h, w}, {&v});
  auto src = v.data();
  auto dst = out.mutable_data();
  for (std::size_t c = 0; c < d; ++c) {
    std::fill_n(dst.begin() + static_cast<std::ptrdiff_t>(c * h * w), h * w, src[c]);
  }
  g.record("tile_spatial", {v}, out, [v, d, h, w](const Tensor<T>& o) {
    auto up = o.grad();
    std::vector<T> dv(d, T{0});
    for (std::size_t c = 0; c < d; ++c) {
      T acc{0};
      for (std::size_t i = 0; i < h * w; ++i) acc += up[c * h * w + i];
      dv[c] = acc;
    }
    Tensor<T>(v).accumulate_grad(dv);
  });
  return out;
}

template <typename T>
Tensor<T> mse_loss(Graph<T>& g, const Tensor<T>& pred_ab, const Tensor<T>& target_ab) {
  require_rank3(pred_ab, "mse_loss");
  require_same_shape(pred_ab, target_ab, "mse_loss");
  if (pred_ab.dim(0) != 2) {
    throw ShapeError("mse_loss: expected two chroma planes, got " + to_string(pred_ab.shape()));
  }
  const std::size_t hw = pred_ab.dim(1) * pred_ab.dim(2);
  if (hw == 0) throw ShapeError("mse_loss: empty planes");

  auto p = pred_ab.data();
  auto t = target_ab.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(t[i]) - static_cast<double>(p[i]);
    acc += d * d;
  }
  Tensor<T> out = g.make_output(Shape{1}, {&pred_ab, &target_ab});
  out.mutable_data()[0] = static_cast<T>(acc / (2.0 * static_cast<double>(hw)));

  g.record("mse_loss", {pred_ab, target_ab}, out, [pred_ab, target_ab, hw](const Tensor<T>& o) {
    const T coeff = o.grad()[0] / static_cast<T>(hw);
    auto p = pred_ab.data();
    auto t = target_ab.data();
    std::vector<T> dp(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) dp[i] = coeff * (p[i] - t[i]);
    if (pred_ab.requires_grad()) Tensor<T>(pred_ab).accumulate_grad(dp);
    if (target_ab.requires_grad()) {
      for (auto& v : dp) v = -v;
      Tensor<T>(target_ab).accumulate_grad(dp);
    }
  });
  return out;
}

template <typename T>
Tensor<T> mse_loss_batch(Graph<T>& g, std::span<const Tensor<T>> preds,
                         std::span<const Tensor<T>> targets) {
  if (preds.empty()) throw ContractError("mse_loss_batch: empty batch");
  if (preds.size() != targets.size()) {
    throw ContractError("mse_loss_batch: " + std::to_string(preds.size()) + " predictions for " +
                        std::to_string(targets.size()) + " targets");
  }
  Tensor<T> total = mse_loss(g, preds[0], targets[0]);
  for (std::size_t i = 1; i < preds.size(); ++i) {
    total = add(g, total, mse_loss(g, preds[i], targets[i]));
  }
  return scale(g, total, T{1} / static_cast<T>(preds.size()));
}

template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x) {
  Tensor<T> out = g.make_output(Shape{1}, {&x});
  T acc{0};
  for (T v : x.data()) acc += v;
  out.mutable_data()[0] = acc;
  g.record("sum", {x}, out, [x](const Tensor<T>& o) {
    std::vector<T> dx(x.size(), o.grad()[0]);
    Tensor<T>(x).accumulate_grad(dx);
  });
  return out;
}

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& x, T factor) {
  Tensor<T> out = g.make_output(x.shape(), {&x});
  auto src = x.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * factor;
  g.record("scale", {x}, out, [x, factor](const Tensor<T>& o) {
    auto up = o.grad();
    std::vector<T> dx(up.size());
    for (std::size_t i = 0; i < up.size(); ++i) dx[i] = up[i] * factor;
    Tensor<T>(x).accumulate_grad(dx);
  });
  return out;
}

template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out = g.make_output(a.shape(), {&a, &b});
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a.data()[i] * b.data()[i];
  g.record("mul", {a, b}, out, [a, b](const Tensor<T>& o) {
    auto up = o.grad();
    std::vector<T> d(up.size());
    if (a.requires_grad()) {
      for (std::size_t i = 0; i < up.size(); ++i) d[i] = up[i] * b.data()[i];
      Tensor<T>(a).accumulate_grad(d);
    }
    if (b.requires_grad()) {
      for (std::size_t i = 0; i < up.size(); ++i) d[i] = up[i] * a.data()[i];
      Tensor<T>(b).accumulate_grad(d);
    }
  });
  return out;
}

template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = g.make_output(a.shape(), {&a, &b});
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a.data()[i] + b.data()[i];
  g.record("add", {a, b}, out, [a, b](const Tensor<T>& o) {
    if (a.requires_grad()) Tensor<T>(a).accumulate_grad(o.grad());
    if (b.requires_grad()) Tensor<T>(b).accumulate_grad(o.grad());
  });
  return out;
}

#define COLORFUSE_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> conv2d(Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                            std::size_t);                                                     \
  template Tensor<T> relu(Graph<T>&, const Tensor<T>&);                                       \
  template Tensor<T> tanh_act(Graph<T>&, const Tensor<T>&);                                   \
  template Tensor<T> upsample_nearest2x(Graph<T>&, const Tensor<T>&);                         \
  template Tensor<T> concat_depth(Graph<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> tile_spatial(Graph<T>&, const Tensor<T>&, std::size_t, std::size_t);     \
  template Tensor<T> mse_loss(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> mse_loss_batch(Graph<T>&, std::span<const Tensor<T>>,                    \
                                    std::span<const Tensor<T>>);                              \
  template Tensor<T> sum(Graph<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale(Graph<T>&, const Tensor<T>&, T);                                   \
  template Tensor<T> mul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> add(Graph<T>&, const Tensor<T>&, const Tensor<T>&);

COLORFUSE_INSTANTIATE_OPS(float)
COLORFUSE_INSTANTIATE_OPS(double)

#undef COLORFUSE_INSTANTIATE_OPS

}  // namespace ops
}  // namespace colorfuse
