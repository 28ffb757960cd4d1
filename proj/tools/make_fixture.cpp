// Writes the 2-16-16-3 fixture network used by the verify-theorem1 tests.
// Biases are nonzero so the activation boundaries do not all pass through the origin.
#include <iostream>
#include <random>

#include "onlab/network.hpp"
#include "onlab/random.hpp"
#include "onlab/serialize.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <out.onlb>\n";
    return 2;
  }
  onlab::Network net = onlab::Network::random({2, 16, 16, 3}, 2016);
  onlab::Rng rng(onlab::derive_seed(2016, 1));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& layer : net.mutable_layers())
    for (double& b : layer.bias) b = u(rng);
  onlab::save_network(net, argv[1]);
  return 0;
}
