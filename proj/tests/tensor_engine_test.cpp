#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "colorfuse/adam.hpp"
#include "colorfuse/error.hpp"
#include "colorfuse/ops.hpp"
#include "colorfuse/tensor.hpp"

using namespace colorfuse;

namespace {

Tensor<float> tensor(Shape s, std::vector<float> v, bool grad = false) {
  return Tensor<float>::from_data(std::move(s), std::move(v), grad);
}

std::vector<float> values(const Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

// Brute-force chroma loss, independent of the engine.
double loop_mse(const std::vector<double>& p, const std::vector<double>& t, std::size_t h,
                std::size_t w) {
  double s = 0.0;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double d = t[(k * h + i) * w + j] - p[(k * h + i) * w + j];
        s += d * d;
      }
  return s / (2.0 * static_cast<double>(h * w));
}

}  // namespace

TEST(Tensor, FactoryChecksElementCount) {
  EXPECT_THROW(tensor({2, 2}, {1, 2, 3}), ShapeError);
  auto t = Tensor<float>::zeros({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(to_string(t.shape()), "[2x3x4]");
}

TEST(Tensor, ZeroGradRequiresTracking) {
  auto t = Tensor<float>::zeros({2});
  EXPECT_THROW(t.zero_grad(), ContractError);
  auto p = Tensor<float>::zeros({2}, true);
  EXPECT_TRUE(p.has_grad());
  p.zero_grad();
  EXPECT_EQ(p.grad().size(), 2u);
}

TEST(Conv2d, IdentityKernel) {
  Graph<float> g;
  auto y = ops::conv2d(g, tensor({1, 1, 1}, {5}), tensor({1, 1, 1, 1}, {1}), tensor({1}, {0}), 1);
  EXPECT_EQ(values(y), std::vector<float>{5});
}

TEST(Conv2d, FirstEncoderLayerShape) {
  Graph<float> g(GradMode::disabled);
  auto y = ops::conv2d(g, Tensor<float>::zeros({1, 224, 224}), Tensor<float>::zeros({64, 1, 3, 3}),
                       Tensor<float>::zeros({64}), 2);
  EXPECT_EQ(y.shape(), (Shape{64, 112, 112}));
}

TEST(Conv2d, OnesKernelCountsNeighbours) {
  Graph<float> g;
  auto y = ops::conv2d(g, Tensor<float>::filled({1, 4, 4}, 1.0f), Tensor<float>::filled({1, 1, 3, 3}, 1.0f),
                       Tensor<float>::zeros({1}), 1);
  // Nested-loop oracle over the zero-padded input.
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = static_cast<int>(i) + dy, xx = static_cast<int>(j) + dx;
          n += yy >= 0 && yy < 4 && xx >= 0 && xx < 4;
        }
      EXPECT_EQ(y.at(0, i, j), static_cast<float>(n)) << i << "," << j;
    }
  }
  EXPECT_EQ(y.at(0, 1, 1), 9.0f);
  EXPECT_EQ(y.at(0, 0, 1), 6.0f);
  EXPECT_EQ(y.at(0, 0, 0), 4.0f);
}

TEST(Conv2d, IsCrossCorrelation) {
  // An asymmetric kernel picks the right neighbour without flipping.
  Graph<float> g;
  auto x = tensor({1, 1, 3}, {1, 2, 3});
  auto k = tensor({1, 1, 3, 3}, {0, 0, 0, 0, 0, 1, 0, 0, 0});
  auto y = ops::conv2d(g, x, k, tensor({1}, {0}), 1);
  EXPECT_EQ(values(y), (std::vector<float>{2, 3, 0}));
}

TEST(Conv2d, AddsBiasPerChannel) {
  Graph<float> g;
  auto y = ops::conv2d(g, Tensor<float>::zeros({1, 2, 2}), Tensor<float>::zeros({2, 1, 1, 1}),
                       tensor({2}, {1.5f, -2.0f}), 1);
  EXPECT_EQ(values(y), (std::vector<float>{1.5f, 1.5f, 1.5f, 1.5f, -2, -2, -2, -2}));
}

TEST(Conv2d, Errors) {
  Graph<float> g;
  auto x = Tensor<float>::zeros({3, 4, 4});
  EXPECT_THROW(ops::conv2d(g, x, Tensor<float>::zeros({2, 2, 3, 3}), Tensor<float>::zeros({2}), 1), ShapeError);
  EXPECT_THROW(ops::conv2d(g, x, Tensor<float>::zeros({2, 3, 2, 2}), Tensor<float>::zeros({2}), 1), ShapeError);
  EXPECT_THROW(ops::conv2d(g, x, Tensor<float>::zeros({2, 3, 3, 3}), Tensor<float>::zeros({3}), 1), ShapeError);
  EXPECT_THROW(ops::conv2d(g, x, Tensor<float>::zeros({2, 3, 3, 3}), Tensor<float>::zeros({2}), 0), ContractError);
}

TEST(Conv2d, SamePaddingShapeAlgebra) {
  for (std::size_t n = 1; n <= 64; ++n) {
    for (std::size_t s : {1u, 2u}) {
      Graph<float> g(GradMode::disabled);
      auto y = ops::conv2d(g, Tensor<float>::zeros({1, n, n + 1}), Tensor<float>::zeros({1, 1, 3, 3}),
                           Tensor<float>::zeros({1}), s);
      EXPECT_EQ(y.dim(1), (n + s - 1) / s) << n << " s=" << s;
      EXPECT_EQ(y.dim(2), (n + s) / s) << n << " s=" << s;
    }
  }
}

TEST(SamePadding, ExtraGoesBottomRight) {
  const auto p = same_padding(4, 3, 2);  // output 2, needs (2-1)*2+3-4 = 1
  EXPECT_EQ(p.output, 2u);
  EXPECT_EQ(p.before, 0u);
  EXPECT_EQ(p.after, 1u);
  const auto q = same_padding(5, 3, 1);
  EXPECT_EQ(q.before, 1u);
  EXPECT_EQ(q.after, 1u);
}

TEST(Relu, Values) {
  Graph<float> g;
  EXPECT_EQ(values(ops::relu(g, tensor({3}, {-1, 0, 2}))), (std::vector<float>{0, 0, 2}));
  EXPECT_EQ(values(ops::relu(g, Tensor<float>::filled({2, 2}, -3.0f))), std::vector<float>(4, 0.0f));
}

TEST(Relu, SubgradientOfSum) {
  auto x = tensor({2}, {-1, 2}, true);
  Graph<float> g;
  g.backward(ops::sum(g, ops::relu(g, x)));
  EXPECT_EQ(std::vector<float>(x.grad().begin(), x.grad().end()), (std::vector<float>{0, 1}));
}

TEST(Tanh, ValuesAndGradientAtOrigin) {
  auto x = tensor({1}, {0}, true);
  Graph<float> g;
  auto y = ops::tanh_act(g, x);
  EXPECT_EQ(y.item(), 0.0f);
  g.backward(ops::sum(g, y));
  EXPECT_FLOAT_EQ(x.grad()[0], 1.0f);
}

TEST(Tanh, StaysInsideOpenInterval) {
  Graph<float> g;
  auto y = ops::tanh_act(g, tensor({4}, {50.0f, -50.0f, 10.0f, 1e30f}));
  for (float v : y.data()) {
    EXPECT_LT(v, 1.0f);
    EXPECT_GT(v, -1.0f);
  }
  EXPECT_GT(y.data()[0], 0.999f);
}

TEST(Upsample, Blocks) {
  Graph<float> g;
  EXPECT_EQ(values(ops::upsample_nearest2x(g, tensor({1, 1, 1}, {3}))), std::vector<float>(4, 3.0f));
  auto y = ops::upsample_nearest2x(g, tensor({1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(y.shape(), (Shape{1, 4, 4}));
  EXPECT_EQ(values(y), (std::vector<float>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
}

TEST(Upsample, GradientSumsBlock) {
  auto x = tensor({1, 1, 1}, {3}, true);
  Graph<float> g;
  g.backward(ops::sum(g, ops::upsample_nearest2x(g, x)));
  EXPECT_EQ(x.grad()[0], 4.0f);
}

TEST(Concat, FusionDepth) {
  Graph<float> g(GradMode::disabled);
  auto y = ops::concat_depth(g, Tensor<float>::zeros({256, 28, 28}), Tensor<float>::zeros({1001, 28, 28}));
  EXPECT_EQ(y.shape(), (Shape{1257, 28, 28}));
}

TEST(Concat, OrderAndIdentity) {
  Graph<float> g;
  auto a = tensor({1, 2, 2}, {1, 2, 3, 4});
  auto b = tensor({1, 2, 2}, {5, 6, 7, 8});
  EXPECT_EQ(values(ops::concat_depth(g, a, b)), (std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8}));
  auto empty = Tensor<float>::zeros({0, 2, 2});
  EXPECT_EQ(values(ops::concat_depth(g, a, empty)), values(a));
  EXPECT_EQ(values(ops::concat_depth(g, empty, a)), values(a));
}

TEST(Concat, SpatialMismatch) {
  Graph<float> g;
  EXPECT_THROW(ops::concat_depth(g, Tensor<float>::zeros({1, 2, 2}), Tensor<float>::zeros({1, 2, 3})),
               ShapeError);
}

TEST(Tile, ConstantSlices) {
  Graph<float> g;
  std::vector<float> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) * 0.001f;
  auto y = ops::tile_spatial(g, tensor({1001}, v), 28, 28);
  EXPECT_EQ(y.shape(), (Shape{1001, 28, 28}));
  for (std::size_t c = 0; c < 1001; c += 97)
    for (std::size_t i = 0; i < 28; ++i)
      for (std::size_t j = 0; j < 28; ++j) ASSERT_EQ(y.at(c, i, j), v[c]);
  EXPECT_EQ(values(ops::tile_spatial(g, tensor({3}, {1, 2, 3}), 1, 1)), (std::vector<float>{1, 2, 3}));
}

TEST(Tile, GradientPerChannel) {
  auto v = tensor({3}, {1, 2, 3}, true);
  Graph<float> g;
  g.backward(ops::sum(g, ops::tile_spatial(g, v, 2, 2)));
  EXPECT_EQ(std::vector<float>(v.grad().begin(), v.grad().end()), std::vector<float>(3, 4.0f));
}

TEST(Mse, Examples) {
  Graph<float> g;
  auto t = Tensor<float>::filled({2, 2, 2}, 1.0f);
  EXPECT_EQ(ops::mse_loss(g, t, t).item(), 0.0f);
  EXPECT_EQ(ops::mse_loss(g, Tensor<float>::zeros({2, 2, 2}), t).item(), 1.0f);
  EXPECT_THROW(ops::mse_loss(g, Tensor<float>::zeros({2, 2, 3}), t), ShapeError);
}

TEST(Mse, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(32), t(32);
    for (auto& x : p) x = u(rng);
    for (auto& x : t) x = u(rng);
    Graph<double> g;
    const double got = ops::mse_loss(g, Tensor<double>::from_data({2, 4, 4}, p),
                                     Tensor<double>::from_data({2, 4, 4}, t)).item();
    const double want = loop_mse(p, t, 4, 4);
    EXPECT_LE(std::abs(got - want), 1e-12 * std::abs(want));
  }
}

TEST(Mse, BatchAveragesImages) {
  Graph<float> g;
  std::vector<Tensor<float>> preds{Tensor<float>::zeros({2, 2, 2}), Tensor<float>::zeros({2, 1, 1})};
  std::vector<Tensor<float>> targets{Tensor<float>::filled({2, 2, 2}, 1.0f),
                                     Tensor<float>::filled({2, 1, 1}, 3.0f)};
  EXPECT_FLOAT_EQ(ops::mse_loss_batch<float>(g, preds, targets).item(), (1.0f + 9.0f) / 2.0f);
}

TEST(Backward, SumGivesOnes) {
  auto x = Tensor<float>::filled({2, 3}, 0.5f, true);
  Graph<float> g;
  g.backward(ops::sum(g, x));
  EXPECT_EQ(std::vector<float>(x.grad().begin(), x.grad().end()), std::vector<float>(6, 1.0f));
}

TEST(Backward, DisconnectedParameterKeepsZeroGrad) {
  auto x = Tensor<float>::filled({2}, 1.0f, true);
  auto unused = Tensor<float>::filled({2}, 1.0f, true);
  Graph<float> g;
  g.backward(ops::sum(g, x));
  EXPECT_EQ(std::vector<float>(unused.grad().begin(), unused.grad().end()), std::vector<float>(2, 0.0f));
}

TEST(Backward, SharedTensorGradientsAdd) {
  auto x = tensor({2}, {1, 2}, true);
  Graph<float> g;
  g.backward(ops::sum(g, ops::mul(g, x, x)));
  EXPECT_EQ(std::vector<float>(x.grad().begin(), x.grad().end()), (std::vector<float>{2, 4}));
}

TEST(Backward, VisitsEachOperationOnce) {
  auto x = tensor({2}, {1, 2}, true);
  Graph<float> g;
  auto y = ops::relu(g, x);
  auto z = ops::add(g, y, y);
  auto l = ops::sum(g, z);
  EXPECT_EQ(g.operation_count(), 3u);
  EXPECT_EQ(g.operation_name(0), "relu");
  g.backward(l);
  EXPECT_EQ(std::vector<float>(x.grad().begin(), x.grad().end()), (std::vector<float>{2, 2}));
}

TEST(Backward, ContractErrors) {
  auto x = Tensor<float>::filled({2}, 1.0f, true);
  Graph<float> g;
  auto y = ops::relu(g, x);
  EXPECT_THROW(g.backward(y), ContractError);  // not a scalar
  EXPECT_THROW(g.backward(Tensor<float>::scalar(1.0f)), ContractError);  // untracked
  Graph<float> other;
  auto foreign = ops::sum(other, x);
  EXPECT_THROW(g.backward(foreign), ContractError);  // recorded elsewhere
}

TEST(Backward, DisabledGraphRecordsNothing) {
  auto x = Tensor<float>::filled({2}, 1.0f, true);
  Graph<float> g(GradMode::disabled);
  auto l = ops::sum(g, ops::relu(g, x));
  EXPECT_EQ(g.operation_count(), 0u);
  EXPECT_FALSE(l.requires_grad());
}

TEST(Determinism, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<float> xv(3 * 9 * 9), kv(4 * 3 * 3 * 3);
    for (auto& v : xv) v = u(rng);
    for (auto& v : kv) v = u(rng);
    auto x = tensor({3, 9, 9}, xv, true);
    auto k = tensor({4, 3, 3, 3}, kv, true);
    auto b = Tensor<float>::zeros({4}, true);
    Graph<float> g;
    auto y = ops::tanh_act(g, ops::conv2d(g, x, k, b, 2));
    g.backward(ops::sum(g, y));
    std::vector<float> out = values(y);
    out.insert(out.end(), k.grad().begin(), k.grad().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = tensor({3}, {1, 2, 3}, true);
  AdamState<float> adam;
  std::vector<Tensor<float>> params{p};
  adam.step(params);
  EXPECT_EQ(values(p), (std::vector<float>{1, 2, 3}));
  EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // m = 0.1, v = 0.001; bias-corrected m/(sqrt(v)+eps) = 1/(1+1e-8).
  auto p = Tensor<double>::from_data({1}, {0.5}, true);
  p.mutable_grad()[0] = 1.0;
  AdamState<double> adam;
  std::vector<Tensor<double>> params{p};
  adam.step(params);
  EXPECT_NEAR(p.data()[0], 0.5 - 0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(adam.first_moment(0)[0], 0.1, 1e-15);
  EXPECT_NEAR(adam.second_moment(0)[0], 0.001, 1e-15);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  auto p = Tensor<double>::from_data({1}, {0.0}, true);
  AdamState<double> adam;
  std::vector<Tensor<double>> params{p};
  double previous = 0.0;
  for (int i = 0; i < 2; ++i) {
    p.mutable_grad()[0] = 2.0;
    adam.step(params);
    EXPECT_LT(p.data()[0], previous);
    previous = p.data()[0];
  }
  // Two steps of a constant gradient: both bias-corrected ratios are 1.
  EXPECT_NEAR(previous, -0.002, 1e-10);
}

TEST(Adam, MissingGradientIsContractError) {
  std::vector<Tensor<float>> params{Tensor<float>::zeros({2})};
  AdamState<float> adam;
  EXPECT_THROW(adam.step(params), ContractError);
}

TEST(Adam, ParameterListMustNotChange) {
  AdamState<float> adam;
  std::vector<Tensor<float>> a{Tensor<float>::zeros({2}, true)};
  adam.step(a);
  std::vector<Tensor<float>> b{Tensor<float>::zeros({3}, true)};
  EXPECT_THROW(adam.step(b), ContractError);
}
