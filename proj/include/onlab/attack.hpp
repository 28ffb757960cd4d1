#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <variant>

#include "onlab/linalg.hpp"
#include "onlab/network.hpp"
#include "onlab/random.hpp"

namespace onlab {

struct CrossEntropyLoss {
  double beta = 1.0;
};

struct LogitLqLoss {
  NormOrder q = NormOrder::two();
};

using AdvLoss = std::variant<CrossEntropyLoss, LogitLqLoss>;

struct AttackConfig {
  NormOrder p = NormOrder::two();
  double eps = 0.1;
  // Unset means 2*eps/iterations. Infinity jumps straight to the sphere: x_k = x + eps*v_k.
  std::optional<double> alpha;
  int iterations = 10;
  AdvLoss loss = CrossEntropyLoss{};
  std::optional<std::size_t> target;
  bool random_init = true;
  // Explicit x0; overrides random_init.
  std::optional<Vec> start;
  bool normalize_u = true;
  bool use_predicted_label = false;
  std::uint64_t seed = 0;

  double step_size() const;
};

struct AttackStep {
  Vec v;
  Vec u;
  Vec x;
  double loss = 0.0;
};

struct AttackResult {
  Vec x_star;
  std::vector<AttackStep> trace;
  bool success = false;
  int cells_crossed = 0;
  bool terminated_early = false;
};

Vec softmax(const Vec& logits, double beta = 1.0);
double cross_entropy(const Vec& logits, std::size_t y, double beta = 1.0);
// d CE / d logits = softmax(beta·z) - onehot(y), independent of beta after the 1/beta scaling.
Vec cross_entropy_grad(const Vec& logits, std::size_t y, double beta = 1.0);

// Ascent direction in logit space.
Vec logit_direction(const AdvLoss& loss, std::size_t y, std::optional<std::size_t> target,
                    const Vec& logits_now, const Vec& logits_clean);

double adversarial_loss_value(const AdvLoss& loss, std::size_t y, std::optional<std::size_t> target,
                              const Vec& logits_now, const Vec& logits_clean);

Vec sample_ball_uniform(const Vec& center, double eps, NormOrder p, Rng& rng);
Vec sample_ball_uniform(const Vec& center, double eps, NormOrder p, std::uint64_t seed);

AttackResult pga_attack(const Network& net, const Vec& x, std::size_t y, const AttackConfig& cfg);

}  // namespace onlab
