#include <gtest/gtest.h>

#include <cmath>

#include "onlab/error.hpp"
#include "onlab/network.hpp"
#include "onlab/svd.hpp"
#include "support.hpp"

using namespace onlab;
using onlab::testing::gaussian_mat;
using onlab::testing::gaussian_vec;
using onlab::testing::max_abs_diff;
using onlab::testing::random_net;

namespace {

// W1 = [[1],[-1]], W2 = [[1,1]], zero biases.
Network toy_net() {
  return Network({Layer{Mat{{1}, {-1}}, {0, 0}, true}, Layer{Mat{{1, 1}}, {0}, false}});
}

Network affine(const Mat& w, const Vec& b) { return Network({Layer{w, b, false}}); }

// Smallest |pre-activation| at x, to keep finite differences away from kinks.
double margin(const Network& net, const Vec& x) {
  const ForwardTrace t = forward(net, x);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < t.pre_activations.size(); ++l)
    for (double z : t.pre_activations[l]) m = std::min(m, std::fabs(z));
  return m;
}

}  // namespace

TEST(Forward, SingleAffineLayer) {
  const Network net = affine(Mat{{1, 2}, {3, -1}}, {0.5, -0.5});
  const ForwardTrace t = forward(net, {1, 1});
  EXPECT_EQ(t.logits, (Vec{3.5, 1.5}));
  EXPECT_EQ(t.pattern.size(), 0u);
}

TEST(Forward, HandEvaluatedToyNet) {
  const ForwardTrace t = forward(toy_net(), {2});
  EXPECT_EQ(t.pre_activations[0], (Vec{2, -2}));
  EXPECT_EQ(t.pattern.bits, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(t.logits, (Vec{2}));
  EXPECT_THROW(forward(toy_net(), {1, 2}), Error);
}

TEST(ActivationPattern, HandValuesAndBoundary) {
  EXPECT_EQ(activation_pattern(toy_net(), {-2}).bits, (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(activation_pattern(toy_net(), {0}).bits, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_TRUE(same_cell(toy_net(), {2}, {2}));
  EXPECT_TRUE(same_cell(toy_net(), {2}, {3}));
  EXPECT_FALSE(same_cell(toy_net(), {2}, {-2}));
}

TEST(Jacobian, HandValues) {
  const Mat w{{1, 2}, {3, -1}};
  EXPECT_EQ(jacobian(affine(w, {0, 0}), {4, 5}), w);
  EXPECT_EQ(jacobian(toy_net(), {2}), (Mat{{1}}));
  EXPECT_EQ(jvp(affine(w, {0, 0}), {0, 0}, {1, 1}), (Vec{3, 2}));
  EXPECT_EQ(vjp(affine(w, {0, 0}), {0, 0}, {1, 1}), (Vec{4, 1}));
}

TEST(Jacobian, MatchesCentralDifferences) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = random_net(onlab::testing::random_widths(5, 3, 3, 4, 12, rng), 100 + trial);
    const Vec x = gaussian_vec(5, rng);
    const double h = 1e-6;
    if (margin(net, x) < 1e-4) continue;
    const Mat j = jacobian(net, x);
    for (std::size_t c = 0; c < 5; ++c) {
      Vec a = x, b = x;
      a[c] += h;
      b[c] -= h;
      const Vec fa = logits(net, a), fb = logits(net, b);
      double err = 0.0, ref = 0.0;
      for (std::size_t r = 0; r < fa.size(); ++r) {
        const double fd = (fa[r] - fb[r]) / (2 * h);
        err += std::pow(fd - j(r, c), 2);
        ref += fd * fd;
      }
      EXPECT_LE(std::sqrt(err), 1e-5 * std::max(std::sqrt(ref), 1e-3));
    }
  }
}

TEST(Jvp, AgreesWithMaterializedJacobianAndAdjoint) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Network net = random_net(onlab::testing::random_widths(6, 4, 4, 3, 16, rng), trial);
    const Vec x = gaussian_vec(6, rng), v = gaussian_vec(6, rng), u = gaussian_vec(4, rng);
    const Mat j = jacobian(net, x);
    EXPECT_LE(max_abs_diff(jvp(net, x, v), matvec(j, v)), 1e-12);
    EXPECT_LE(max_abs_diff(vjp(net, x, u), matvec_t(j, u)), 1e-12);
    EXPECT_NEAR(dot(u, jvp(net, x, v)), dot(vjp(net, x, u), v), 1e-12);
    EXPECT_EQ(jvp(net, x, Vec(6, 0.0)), Vec(4, 0.0));
  }
}

TEST(Network, WithinCellLinearityAndConstantJacobian) {
  Rng rng(9);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Network net = random_net({4, 10, 10, 3}, 300 + trial);
    const Vec x = gaussian_vec(4, rng);
    const Vec z = gaussian_vec(4, rng, 0.05);
    if (!same_cell(net, x, add(x, z))) continue;
    ++checked;
    EXPECT_LE(max_abs_diff(logits(net, add(x, z)), add(logits(net, x), jvp(net, x, z))), 1e-10);
    EXPECT_EQ(jacobian(net, x), jacobian(net, add(x, z)));
  }
  EXPECT_GT(checked, 50);
}

TEST(Network, SubMultiplicativeSpectralBound) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = random_net({6, 12, 8, 4}, 500 + trial);
    double bound = 1.0;
    for (const Layer& l : net.layers()) bound *= top_singular_value(l.weight);
    EXPECT_LE(top_singular_value(jacobian(net, gaussian_vec(6, rng))), bound * (1 + 1e-12));
  }
}

TEST(ParamGradients, AffineLayerAndZeroGradient) {
  const Network net = affine(Mat{{1, 2}, {3, -1}}, {0, 0});
  const ParamGradients g = param_gradients(net, {2, 3}, {1, -1});
  EXPECT_EQ(g.weight[0], (Mat{{2, 3}, {-2, -3}}));
  EXPECT_EQ(g.bias[0], (Vec{1, -1}));
  const ParamGradients z = param_gradients(random_net({3, 5, 2}, 1), {1, 2, 3}, {0, 0});
  EXPECT_EQ(z.squared_norm(), 0.0);
}

TEST(ParamGradients, MatchCentralDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    Network net = random_net({3, 6, 5, 2}, 700 + trial);
    const Vec x = gaussian_vec(3, rng), g = gaussian_vec(2, rng);
    if (margin(net, x) < 1e-3) continue;
    const ParamGradients pg = param_gradients(net, x, g);
    const double h = 1e-6;
    for (std::size_t l = 0; l < net.depth(); ++l) {
      auto& layer = net.mutable_layers()[l];
      auto check = [&](double& theta, double analytic) {
        const double keep = theta;
        theta = keep + h;
        const double fa = dot(g, logits(net, x));
        theta = keep - h;
        const double fb = dot(g, logits(net, x));
        theta = keep;
        const double fd = (fa - fb) / (2 * h);
        EXPECT_LE(std::fabs(fd - analytic), 1e-4 * std::max({std::fabs(fd), std::fabs(analytic), 1e-2}));
      };
      for (std::size_t k = 0; k < layer.weight.size(); ++k) check(layer.weight.data()[k], pg.weight[l].data()[k]);
      for (std::size_t k = 0; k < layer.bias.size(); ++k) check(layer.bias[k], pg.bias[l][k]);
    }
  }
}

TEST(BilinearJacobianGradients, MatchesFiniteDifferencesOfUJv) {
  Rng rng(4);
  Network net = random_net({4, 7, 6, 3}, 77);
  const Vec x = gaussian_vec(4, rng), u = gaussian_vec(3, rng), v = gaussian_vec(4, rng);
  const ActivationPattern pat = activation_pattern(net, x);
  const ParamGradients pg = bilinear_jacobian_gradients(net, pat, u, v);
  const double h = 1e-6;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    Mat& w = net.mutable_layers()[l].weight;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double keep = w.data()[k];
      w.data()[k] = keep + h;
      const double fa = dot(u, jvp(net, pat, v));
      w.data()[k] = keep - h;
      const double fb = dot(u, jvp(net, pat, v));
      w.data()[k] = keep;
      EXPECT_NEAR((fa - fb) / (2 * h), pg.weight[l].data()[k], 1e-6);
    }
    for (double b : pg.bias[l]) EXPECT_EQ(b, 0.0);
  }
}

TEST(MapLayer, LastHiddenTruncatesAndFallsBack) {
  const Network net = random_net({3, 5, 4, 2}, 3);
  const Vec x{0.1, -0.4, 0.9};
  EXPECT_EQ(map_output_dim(net, MapLayer::LastHidden), 4u);
  EXPECT_EQ(map_output(net, x, MapLayer::LastHidden), forward(net, x).post_activations[1]);
  EXPECT_EQ(map_jacobian(net, x, MapLayer::Logits), jacobian(net, x));
  const Network lin = affine(Mat{{1, 2}}, {0});
  EXPECT_EQ(map_output_dim(lin, MapLayer::LastHidden), 1u);
  Rng rng(2);
  const Vec v = gaussian_vec(3, rng), u = gaussian_vec(4, rng);
  const ActivationPattern pat = activation_pattern(net, x);
  const Mat j = map_jacobian(net, x, MapLayer::LastHidden);
  EXPECT_LE(max_abs_diff(map_jvp(net, pat, v, MapLayer::LastHidden), matvec(j, v)), 1e-12);
  EXPECT_LE(max_abs_diff(map_vjp(net, pat, u, MapLayer::LastHidden), matvec_t(j, u)), 1e-12);
}

TEST(PreactivationJacobian, RowsMatchDirectionalDerivatives) {
  const Network net = random_net({3, 5, 4, 2}, 31);
  Rng rng(8);
  const Vec x = gaussian_vec(3, rng), v = gaussian_vec(3, rng, 1e-7);
  if (!same_cell(net, x, add(x, v))) GTEST_SKIP();
  const Mat g = preactivation_jacobian(net, x);
  ASSERT_EQ(g.rows(), net.neuron_count());
  const ForwardTrace a = forward(net, x), b = forward(net, add(x, v));
  std::size_t row = 0;
  for (std::size_t l = 0; l + 1 < net.depth(); ++l)
    for (std::size_t k = 0; k < a.pre_activations[l].size(); ++k, ++row) {
      double pred = 0.0;
      for (std::size_t c = 0; c < 3; ++c) pred += g(row, c) * v[c];
      EXPECT_NEAR(b.pre_activations[l][k] - a.pre_activations[l][k], pred, 1e-15);
    }
}

TEST(Network, ValidateRejectsBrokenShapes) {
  EXPECT_THROW(Network({Layer{Mat(2, 3), Vec(2), true}, Layer{Mat(1, 3), Vec(1), false}}), Error);
  EXPECT_THROW(Network({Layer{Mat(2, 3), Vec(2), true}}), Error);
  EXPECT_EQ(Network::random({3, 5, 4, 2}, 0).neuron_count(), 9u);
}

TEST(Toeplitz, HandLayouts) {
  EXPECT_EQ(conv_to_toeplitz(Mat{{1}}, ConvGeometry{1, 3}), Mat::identity(3));
  EXPECT_EQ(conv_to_toeplitz(Mat{{1, -1}}, ConvGeometry{1, 3}), (Mat{{1, -1, 0}, {0, 1, -1}}));
  EXPECT_THROW(conv_to_toeplitz(Mat{{1, 1, 1, 1}}, ConvGeometry{1, 3}), Error);
}

TEST(Toeplitz, MatchesDirectConvolution) {
  Rng rng(77);
  for (const ConvGeometry g : {ConvGeometry{5, 5, 1, 0, 0}, ConvGeometry{5, 5, 2, 1, 1}, ConvGeometry{6, 4, 1, 1, 0}}) {
    const Mat k = gaussian_mat(3, 3, rng);
    const Vec x = gaussian_vec(g.in_h * g.in_w, rng);
    const Mat t = conv_to_toeplitz(k, g);
    const Vec y = matvec(t, x);
    const std::size_t oh = (g.in_h + 2 * g.pad_h - 3) / g.stride + 1, ow = (g.in_w + 2 * g.pad_w - 3) / g.stride + 1;
    ASSERT_EQ(y.size(), oh * ow);
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b) {
            const long r = static_cast<long>(i * g.stride + a) - static_cast<long>(g.pad_h);
            const long c = static_cast<long>(j * g.stride + b) - static_cast<long>(g.pad_w);
            if (r < 0 || c < 0 || r >= static_cast<long>(g.in_h) || c >= static_cast<long>(g.in_w)) continue;
            s += k(a, b) * x[static_cast<std::size_t>(r) * g.in_w + static_cast<std::size_t>(c)];
          }
        EXPECT_NEAR(y[i * ow + j], s, 1e-12);
      }
  }
}
