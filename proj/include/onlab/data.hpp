#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onlab/linalg.hpp"
#include "onlab/train.hpp"

namespace onlab {

enum class SyntheticKind { Blobs, Moons, Rings };
enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

SyntheticKind parse_synthetic_kind(const std::string& s);
std::string to_string(SyntheticKind k);
std::string to_string(Split s);
Split parse_split(const std::string& s);

// Dims 0-1 carry the coarse shape (blob centers on the unit circle, two moons, or
// concentric rings) with Gaussian noise of std `noise`. Any further dims carry a small
// class-dependent offset ±feature_offset with noise fine_noise_ratio*noise, giving the
// task fine-scale structure that a robust classifier can exploit.
struct SyntheticParams {
  SyntheticKind kind = SyntheticKind::Blobs;
  std::size_t n_per_class = 500;
  std::size_t classes = 3;
  std::size_t dim = 2;
  double noise = 0.1;
  double feature_offset = 0.03;
  double fine_noise_ratio = 0.0125;
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Vec> inputs;
  std::vector<std::size_t> labels;
  std::vector<Split> splits;
  std::size_t classes = 0;

  std::size_t size() const { return inputs.size(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
  LabeledSet subset(Split s) const;
  void validate() const;
};

// Stratified 60/20/20 split per class.
Dataset gen_synthetic(const SyntheticParams& params);

// Per-feature centering and one global scale so the mean per-feature variance is 1,
// both estimated on the training split.
void standardize(Dataset& d);

// Columns: split,label,x0,...,x{n-1}
void save_dataset_csv(const Dataset& d, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

}  // namespace onlab
