#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "onlab/linalg.hpp"
#include "onlab/network.hpp"
#include "onlab/random.hpp"

namespace onlab {

class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual Vec apply(const Vec& v) const = 0;
  virtual Vec apply_t(const Vec& u) const = 0;
};

class MatrixOperator final : public LinearOperator {
 public:
  explicit MatrixOperator(Mat m) : m_(std::move(m)) {}
  std::size_t rows() const override { return m_.rows(); }
  std::size_t cols() const override { return m_.cols(); }
  Vec apply(const Vec& v) const override { return matvec(m_, v); }
  Vec apply_t(const Vec& u) const override { return matvec_t(m_, u); }

 private:
  Mat m_;
};

// J(x) of the chosen map, applied through jvp/vjp with the pattern frozen at x.
// Holds a reference to the network.
class JacobianOperator final : public LinearOperator {
 public:
  JacobianOperator(const Network& net, const Vec& x, MapLayer layer = MapLayer::Logits);
  std::size_t rows() const override;
  std::size_t cols() const override { return net_.input_dim(); }
  Vec apply(const Vec& v) const override;
  Vec apply_t(const Vec& u) const override;
  const ActivationPattern& pattern() const { return pattern_; }

 private:
  const Network& net_;
  ActivationPattern pattern_;
  MapLayer layer_;
};

struct PowerIterState {
  Vec u;
  Vec v;
  double sigma = 0.0;
  int iteration = 0;
  bool converged = false;
};

struct OpNormConfig {
  NormOrder p = NormOrder::two();
  NormOrder q = NormOrder::two();
  int iterations = 10;
  double alpha = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
  // u <- sign(ũ)|ũ|^{q-1}, unnormalized.
  bool use_q_power = false;
  int restarts = 8;
};

// Uniform direction on the unit p-sphere for p=2; normalized signed exponentials otherwise.
Vec random_unit_vector(std::size_t n, NormOrder p, Rng& rng);

// One step of the per-weight power method.
PowerIterState global_snr_power_step(const Mat& weight, const PowerIterState& state);

// (2,2) power method through jvp/vjp. Uses v0 when given, else a seeded random start.
PowerIterState dd_spectral_power(const LinearOperator& op, const OpNormConfig& cfg,
                                 std::optional<Vec> v0 = std::nullopt);
PowerIterState dd_spectral_power(const Network& net, const Vec& x, const OpNormConfig& cfg,
                                 std::optional<Vec> v0 = std::nullopt,
                                 MapLayer layer = MapLayer::Logits);

// Projected gradient ascent on ||Jv||_q over the unit p-sphere, finite step alpha (p=2).
// An infinite alpha reduces to the power-method limit.
PowerIterState opnorm_pga_iteration(const LinearOperator& op, const OpNormConfig& cfg, const Vec& v0);
PowerIterState opnorm_pga_iteration(const Network& net, const Vec& x, const OpNormConfig& cfg,
                                    const Vec& v0);

PowerIterState opnorm_power_limit(const LinearOperator& op, const OpNormConfig& cfg, const Vec& v0);
PowerIterState opnorm_power_limit(const Network& net, const Vec& x, const OpNormConfig& cfg,
                                  const Vec& v0);

// Best of cfg.restarts seeded random starts.
PowerIterState opnorm_power_limit_restarts(const LinearOperator& op, const OpNormConfig& cfg);

// Exact (p,q) operator norm where it is tractable; NpHardCombination otherwise.
double closed_form_opnorm(const Mat& m, NormOrder p, NormOrder q);
bool opnorm_tractable(NormOrder p, NormOrder q);

// True when sigma_1 - sigma_2 < rel * sigma_1, in which case the (2,2) power
// method's limiting vectors are not unique.
bool top_singular_degenerate(const Mat& m, double rel = 1e-8);

}  // namespace onlab
