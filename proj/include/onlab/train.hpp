#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "onlab/kernels.hpp"
#include "onlab/network.hpp"
#include "onlab/objective.hpp"

namespace onlab {

struct LabeledSet {
  std::vector<Vec> inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return inputs.size(); }
};

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  Objective objective = StandardObjective{};
  ExecPolicy policy = ExecPolicy::Parallel;
};

struct EpochMetrics {
  int epoch = 0;
  double objective = 0.0;
  double clean_acc = 0.0;
  double probe_sigma_mean = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochMetrics> metrics;  // row 0 is the untrained network
  std::size_t skipped_examples = 0;
};

// Momentum SGD: vel <- momentum*vel + grad; theta <- theta - lr*vel.
// clean_acc is measured on `eval`, probe_sigma_mean is the mean top singular value
// of the logit Jacobian over `probe`.
TrainResult train(Network net, const LabeledSet& data, const LabeledSet& eval,
                  const std::vector<Vec>& probe, const TrainConfig& cfg);

// Central finite differences of the full objective against its analytic gradient.
// Inner maximizers are recomputed at every perturbed point, so agreement requires
// them to be converged (or locally constant, as sign-type attack steps are).
struct GradCheckResult {
  double rel_error = 0.0;          // ||g - fd|| / ||fd||
  double max_elementwise = 0.0;    // max |g - fd| / max(|g|, |fd|, floor)
  std::size_t checked = 0;
};
GradCheckResult check_objective_gradient(const Network& net, const Batch& batch,
                                         const Objective& obj, const ObjectiveContext& ctx,
                                         const GlobalSnrState& state = {}, double h = 1e-6,
                                         double floor = 1e-6);

// lo * (hi/lo)^(i/(count-1)), i = 0..count-1.
std::vector<double> log_grid(double lo, double hi, int count);

struct SweepPoint {
  double lambda = 0.0;
  double val_acc = 0.0;
};

// Largest lambda whose validation accuracy is within `tolerance` of the reference.
// Returns the index into points, or points.size() when none qualifies.
std::size_t select_matched_lambda(const std::vector<SweepPoint>& points, double reference_acc,
                                  double tolerance = 0.01);

}  // namespace onlab
