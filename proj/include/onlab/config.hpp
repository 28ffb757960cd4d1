#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "onlab/linalg.hpp"

namespace onlab {

struct DataSection {
  std::string kind = "blobs";
  std::size_t n_per_class = 500;
  std::size_t classes = 3;
  std::size_t dim = 64;
  double noise = 0.4;
  double feature_offset = 0.03;
  double fine_noise_ratio = 0.0125;
  std::string path;  // load this CSV instead of generating
};

struct ModelSection {
  std::vector<std::size_t> hidden{32, 32};
  std::string path;  // network consumed by attack/analyze/verify-theorem1
};

struct TrainSection {
  std::string objective = "standard";
  int epochs = 150;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double lambda = 2.0;  // regularizer weight
  std::string snr_variant = "sigma_squared";
  double sos_eps = 0.0;  // 0 means the attack radius
  int power_iters = 10;
  NormOrder onr_p = NormOrder::two();
  NormOrder onr_q = NormOrder::two();
  bool use_q_power = false;
  double interp_t = 0.5;
  double at_weight = 1.0;  // adversarial loss weight for adversarial and interpolated training
};

struct AttackSection {
  NormOrder p = NormOrder::two();
  double eps = 1.0;
  int iterations = 10;
  std::optional<double> alpha;  // unset: 2*eps/iterations
  std::string loss = "ce";
  NormOrder q = NormOrder::two();
  double beta = 1.0;
  bool random_init = true;
  long target = -1;
  bool use_predicted_label = false;
  bool normalize_u = true;
};

struct AnalysisSection {
  std::string layer = "last_hidden";
  std::size_t test_points = 100;
  std::vector<double> radii;     // empty: eps * {0, 0.1, ..., 2}
  std::vector<double> eps_grid;  // empty: eps * {0, 0.125, ..., 2}
  std::vector<double> activation_eps;  // empty: eps * {0, 0.25, ..., 2}
  std::string method_label;      // accuracy.csv label; defaults to the objective name
  // eps selection: smallest lo*factor^i whose standard robust accuracy is <= select_max_acc
  double select_lo = 0.1;
  double select_factor = 1.25;
  int select_count = 30;
  double select_max_acc = 0.05;
  std::vector<double> lambda_grid{0.3, 0.5, 1.0, 2.0, 3.0};
  double match_tolerance = 0.01;
  bool interpolation = false;
  std::vector<double> interp_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t verify_points = 10;
  int verify_iters = 10;
  double in_cell_fraction = 0.5;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  DataSection data;
  ModelSection model;
  TrainSection train;
  AttackSection attack;
  AnalysisSection analysis;
};

// `section.key=value`, or `key=value` for the top-level seed and threads.
using Override = std::pair<std::string, std::string>;
Override parse_override(const std::string& s);

// Unknown sections or keys raise ConfigError.
ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});
ExperimentConfig config_from_string(const std::string& ini, const std::vector<Override>& overrides = {});
void apply_override(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value);

// Every key in a fixed order, one `section.key=value` per line.
std::string canonical_text(const ExperimentConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace onlab
