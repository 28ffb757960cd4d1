#pragma once

#include <cstdint>
#include <exception>
#include <vector>

#include <omp.h>

#include "onlab/attack.hpp"
#include "onlab/network.hpp"

namespace onlab {

enum class ExecPolicy { Serial, Parallel };

// 0 leaves the OpenMP default alone.
void set_thread_count(int threads);
int thread_count();

// Runs f(i) for i in [0, n). Every i writes only its own output slot, so results do
// not depend on scheduling. The exception from the lowest failing index is rethrown.
template <class F>
void for_each_index(std::size_t n, ExecPolicy policy, F&& f) {
  if (policy == ExecPolicy::Serial) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Largest singular value of the chosen map's Jacobian at each input.
Vec batch_top_sigma(const Network& net, const std::vector<Vec>& inputs, MapLayer layer,
                    ExecPolicy policy);

// One attack per input; seeds[i] replaces cfg.seed for input i.
std::vector<AttackResult> batch_attack(const Network& net, const std::vector<Vec>& inputs,
                                       const std::vector<std::size_t>& labels,
                                       const AttackConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds, ExecPolicy policy);

// Fraction of inputs whose prediction matches the label.
double batch_accuracy(const Network& net, const std::vector<Vec>& inputs,
                      const std::vector<std::size_t>& labels, ExecPolicy policy);

}  // namespace onlab
