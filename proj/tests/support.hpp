#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "onlab/linalg.hpp"
#include "onlab/network.hpp"
#include "onlab/random.hpp"

namespace onlab::testing {

inline Vec gaussian_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (double& x : v) x = g(rng);
  return v;
}

inline Mat gaussian_mat(std::size_t r, std::size_t c, Rng& rng) {
  Mat m(r, c);
  std::normal_distribution<double> g;
  for (double& x : m.data()) x = g(rng);
  return m;
}

// Random weights and nonzero biases so cell boundaries are in general position.
inline Network random_net(const std::vector<std::size_t>& widths, std::uint64_t seed, double bias = 0.3) {
  Network net = Network::random(widths, seed);
  Rng rng(derive_seed(seed, 99));
  std::uniform_real_distribution<double> u(-bias, bias);
  for (auto& l : net.mutable_layers())
    for (double& b : l.bias) b = u(rng);
  return net;
}

// Widths drawn from [lo, hi] for a net with `layers` affine layers.
inline std::vector<std::size_t> random_widths(std::size_t in, std::size_t out, int layers, std::size_t lo,
                                              std::size_t hi, Rng& rng) {
  std::uniform_int_distribution<std::size_t> w(lo, hi);
  std::vector<std::size_t> widths{in};
  for (int l = 0; l + 1 < layers; ++l) widths.push_back(w(rng));
  widths.push_back(out);
  return widths;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return max_abs_diff(a.data(), b.data()); }

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

}  // namespace onlab::testing
