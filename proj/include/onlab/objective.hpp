#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "onlab/attack.hpp"
#include "onlab/kernels.hpp"
#include "onlab/network.hpp"

namespace onlab {

struct StandardObjective {};

struct AdversarialObjective {
  AttackConfig attack;
  double weight = 1.0;
};

struct GlobalSnrObjective {
  double weight = 0.0;
  int power_iters = 1;
};

enum class SnrVariant { SigmaSquared, SumOfSquares };

struct DataDepSnrObjective {
  double weight = 0.0;
  SnrVariant variant = SnrVariant::SigmaSquared;
  double eps = 0.0;  // step length along v for SumOfSquares
  int power_iters = 10;
};

struct DataDepOnrObjective {
  double weight = 0.0;
  NormOrder p = NormOrder::two();
  NormOrder q = NormOrder::two();
  int iters = 10;
  // Penalize ||J||^q / q instead of ||J||.
  bool use_q_power = false;
};

struct InterpolatedObjective {
  double t = 0.0;
  AdversarialObjective at;
  DataDepSnrObjective snr;
};

using Objective = std::variant<StandardObjective, AdversarialObjective, GlobalSnrObjective,
                               DataDepSnrObjective, DataDepOnrObjective, InterpolatedObjective>;

void validate_objective(const Objective& obj);
std::string objective_name(const Objective& obj);

// Persisted per-layer power-iteration vectors for the global regularizer.
struct GlobalSnrState {
  std::vector<Vec> u;
  std::vector<Vec> v;
  std::vector<double> sigma;

  bool initialized() const { return !v.empty(); }
  void initialize(const Network& net, std::uint64_t seed);
};

// Inputs and labels plus the dataset index of each example. The index keys the
// per-example random streams so every objective draws the same numbers for an example.
struct Batch {
  std::vector<const Vec*> inputs;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> ids;

  std::size_t size() const { return inputs.size(); }
};

struct ObjectiveContext {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  ExecPolicy policy = ExecPolicy::Serial;
};

struct ObjectiveResult {
  double value = 0.0;
  ParamGradients grads;
  std::size_t skipped = 0;
};

ObjectiveResult objective_value_and_grads(const Network& net, const Batch& batch,
                                          const Objective& obj, GlobalSnrState& state,
                                          const ObjectiveContext& ctx);

}  // namespace onlab
