#include "onlab/kernels.hpp"

#include "onlab/error.hpp"
#include "onlab/svd.hpp"

namespace onlab {

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

Vec batch_top_sigma(const Network& net, const std::vector<Vec>& inputs, MapLayer layer,
                    ExecPolicy policy) {
  Vec out(inputs.size());
  for_each_index(inputs.size(), policy, [&](std::size_t i) {
    out[i] = top_singular_value(map_jacobian(net, inputs[i], layer));
  });
  return out;
}

std::vector<AttackResult> batch_attack(const Network& net, const std::vector<Vec>& inputs,
                                       const std::vector<std::size_t>& labels,
                                       const AttackConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds, ExecPolicy policy) {
  require_dims(labels.size(), inputs.size(), "attack labels");
  require_dims(seeds.size(), inputs.size(), "attack seeds");
  std::vector<AttackResult> out(inputs.size());
  for_each_index(inputs.size(), policy, [&](std::size_t i) {
    AttackConfig c = cfg;
    c.seed = seeds[i];
    out[i] = pga_attack(net, inputs[i], labels[i], c);
  });
  return out;
}

double batch_accuracy(const Network& net, const std::vector<Vec>& inputs,
                      const std::vector<std::size_t>& labels, ExecPolicy policy) {
  require_dims(labels.size(), inputs.size(), "accuracy labels");
  if (inputs.empty()) return 0.0;
  std::vector<std::uint8_t> hit(inputs.size());
  for_each_index(inputs.size(), policy,
                 [&](std::size_t i) { hit[i] = predict(net, inputs[i]) == labels[i]; });
  std::size_t c = 0;
  for (auto h : hit) c += h;
  return static_cast<double>(c) / static_cast<double>(inputs.size());
}

}  // namespace onlab
