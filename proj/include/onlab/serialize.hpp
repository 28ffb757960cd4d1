#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onlab/network.hpp"

namespace onlab {

inline constexpr std::uint32_t kNetworkFormatVersion = 1;

// "ONLB", u32 version, u32 layer count, then per layer: in u32, out u32,
// has_relu u8, row-major f64 weights, f64 biases. Little-endian.
std::vector<std::uint8_t> encode_network(const Network& net);
Network decode_network(const std::vector<std::uint8_t>& bytes);

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace onlab
