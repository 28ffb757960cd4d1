#pragma once

#include <cstdint>
#include <vector>

#include "onlab/attack.hpp"
#include "onlab/kernels.hpp"
#include "onlab/linalg.hpp"
#include "onlab/network.hpp"
#include "onlab/train.hpp"

namespace onlab {

struct RegressionJacobian {
  Mat w_hat;
  Vec b_hat;
  double residual_rms = 0.0;
  bool all_in_cell = false;
};

// Least-squares affine fit of the logits over x + noise_scale*N(0, I) probes.
RegressionJacobian extract_jacobian_regression(const Network& net, const Vec& x,
                                               std::size_t n_samples, double noise_scale,
                                               std::uint64_t seed);

// Descending singular values of the map's Jacobian at x.
Vec singular_spectrum(const Network& net, const Vec& x, MapLayer layer = MapLayer::LastHidden);

// |cos| between the perturbation and each right singular vector, by rank.
Vec alignment_curve(const Vec& perturbation, const Network& net, const Vec& x,
                    MapLayer layer = MapLayer::LastHidden);

struct RadiusValue {
  double radius = 0.0;
  double value = 0.0;
  bool same_cell = false;
};

std::vector<RadiusValue> linearity_deviation(const Network& net, const Vec& x, const Vec& direction,
                                             const std::vector<double>& radii,
                                             MapLayer layer = MapLayer::LastHidden);

std::vector<RadiusValue> top_sv_over_distance(const Network& net, const Vec& x, const Vec& direction,
                                              const std::vector<double>& radii,
                                              MapLayer layer = MapLayer::LastHidden);

double shared_activation_fraction(const Network& net, const Vec& base, const Vec& z);

// Largest r with the whole p-ball B_r(x) inside x's activation cell:
// min over hidden units of |z_j(x)| / ||grad z_j||_{p*}.
double in_cell_radius(const Network& net, const Vec& x, NormOrder p);

// Distance from x to the first activation boundary along direction (infinite if none).
double boundary_distance_along(const Network& net, const Vec& x, const Vec& direction);

struct EquivalenceReport {
  NormOrder p = NormOrder::two();
  NormOrder q = NormOrder::two();
  double eps = 0.0;
  Vec cosines;       // per iteration, between the attack's v_k and the power method's v_k
  Vec sigma_pga;     // ||f(x_k) - f(x)||_q / eps
  Vec sigma_power;   // ||J v_k||_q
  std::vector<std::uint8_t> in_cell;  // x_k in x's cell
  bool same_cell_throughout = false;
  double objective_identity_error = 0.0;  // | ||f(x*) - f(x)||_q - eps ||J v||_q |, in-cell only
};

// Runs the alpha = inf logit-lq attack from x0 = x + eps*v0 and the power-method limit
// from v0 side by side.
EquivalenceReport verify_theorem1(const Network& net, const Vec& x, NormOrder p, NormOrder q,
                                  double eps, int iters, const Vec& v0);

struct AccuracyPoint {
  double eps = 0.0;
  double accuracy = 0.0;
  double stderr_ = 0.0;
};

// Accuracy under attack on an ascending eps grid. A point broken at some radius counts
// as broken at every larger radius, since the smaller ball lies inside the larger one.
// Each sample uses one attack seed across the whole grid; alpha is rescaled as 2*eps/iters.
std::vector<AccuracyPoint> robust_accuracy_curve(const Network& net, const LabeledSet& data,
                                                 const std::vector<double>& eps_grid,
                                                 const AttackConfig& attack_template,
                                                 std::uint64_t seed, ExecPolicy policy);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_se(const Vec& values);
double median(Vec values);

}  // namespace onlab
