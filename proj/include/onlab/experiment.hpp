#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onlab/analysis.hpp"
#include "onlab/config.hpp"
#include "onlab/data.hpp"
#include "onlab/kernels.hpp"
#include "onlab/network.hpp"
#include "onlab/train.hpp"

namespace onlab {

MapLayer parse_map_layer(const std::string& s);

// Loads data.path when set, otherwise generates the synthetic set from the global seed.
Dataset make_dataset(const ExperimentConfig& cfg);

Network init_network(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t classes);

// The [attack] section at radius eps.
AttackConfig attack_config(const ExperimentConfig& cfg, double eps);

// method is one of the train.objective names. lambda weights the regularizer or the
// adversarial loss; eps is the attack (and sum-of-squares step) radius.
Objective make_objective(const ExperimentConfig& cfg, const std::string& method, double lambda,
                         double eps);

// Trains a fresh network on the train split; metrics are measured on the val split.
TrainResult train_model(const ExperimentConfig& cfg, const Dataset& data, const Objective& obj,
                        ExecPolicy policy);

struct EpsSelection {
  double eps = 0.0;
  std::vector<AccuracyPoint> curve;  // robust val accuracy over the candidate grid
  bool found = false;
};

// Smallest select_lo*select_factor^i whose robust val accuracy is <= select_max_acc.
// Falls back to the largest candidate when none qualifies.
EpsSelection select_eps(const ExperimentConfig& cfg, const Network& net, const Dataset& data,
                        ExecPolicy policy);

// Default grids are multiples of eps when the config leaves them empty.
std::vector<double> radii_for(const ExperimentConfig& cfg, double eps);
std::vector<double> eps_grid_for(const ExperimentConfig& cfg, double eps);
std::vector<double> activation_eps_for(const ExperimentConfig& cfg, double eps);

// The first analysis.test_points points of the test split.
LabeledSet test_points(const ExperimentConfig& cfg, const Dataset& data);

struct SpectrumRow {
  std::size_t sample_id;
  std::size_t rank;
  double sigma;
};
struct AlignmentRow {
  std::size_t sample_id;
  std::size_t rank;
  double cosine;
};
struct CurveRow {
  std::size_t sample_id;
  std::string direction_kind;  // adversarial | random
  double radius;
  double value;
};
struct ActivationRow {
  std::string base_kind;  // data | off_manifold
  double eps;
  double mean;
  double stderr_;
};
struct AccuracyRow {
  std::string method;
  double eps;
  double accuracy;
  double stderr_;
};
struct EquivalenceRow {
  std::size_t sample_id;
  std::string p;
  std::string q;
  double eps;
  int iter;
  double cosine;
  bool in_cell;
  double sigma_pga;
  double sigma_power;
};

// Unit adversarial directions (x* - x)/||x* - x|| at radius eps, one per point.
// A point whose attack does not move gets an empty vector.
std::vector<Vec> adversarial_directions(const ExperimentConfig& cfg, const Network& net,
                                        const LabeledSet& pts, double eps, ExecPolicy policy);
std::vector<Vec> random_directions(const ExperimentConfig& cfg, std::size_t count, std::size_t dim);

std::vector<SpectrumRow> spectrum_rows(const ExperimentConfig& cfg, const Network& net,
                                       const LabeledSet& pts, ExecPolicy policy);
std::vector<AlignmentRow> alignment_rows(const ExperimentConfig& cfg, const Network& net,
                                         const LabeledSet& pts, double eps, ExecPolicy policy);
std::vector<CurveRow> linearity_rows(const ExperimentConfig& cfg, const Network& net,
                                     const LabeledSet& pts, double eps, ExecPolicy policy);
std::vector<CurveRow> topsv_rows(const ExperimentConfig& cfg, const Network& net,
                                 const LabeledSet& pts, double eps, ExecPolicy policy);
// Random z uniform on the l2 sphere of each radius; off-manifold bases are uniform in
// [-R, R]^n with R the largest absolute training feature.
std::vector<ActivationRow> activation_rows(const ExperimentConfig& cfg, const Network& net,
                                           const LabeledSet& pts, double box_radius, double eps,
                                           ExecPolicy policy);
std::vector<AccuracyRow> accuracy_rows(const ExperimentConfig& cfg, const std::string& method,
                                       const Network& net, const LabeledSet& pts, double eps,
                                       ExecPolicy policy);
// All nine (p, q) pairs at each point, eps = in_cell_fraction * in_cell_radius(x, p).
std::vector<EquivalenceRow> equivalence_rows(const ExperimentConfig& cfg, const Network& net,
                                             const std::vector<Vec>& points, ExecPolicy policy);

double box_radius(const Dataset& data);

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows);
void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows);
void write_alignment_csv(const std::string& path, const std::vector<AlignmentRow>& rows);
void write_linearity_csv(const std::string& path, const std::vector<CurveRow>& rows);
void write_topsv_csv(const std::string& path, const std::vector<CurveRow>& rows);
void write_activations_csv(const std::string& path, const std::vector<ActivationRow>& rows);
void write_accuracy_csv(const std::string& path, const std::vector<AccuracyRow>& rows);
void write_equivalence_csv(const std::string& path, const std::vector<EquivalenceRow>& rows);

struct MethodRun {
  std::string method;  // standard | adversarial | dd_snr | interpolated
  double lambda = 0.0;
  double t = 0.0;
  double val_acc = 0.0;
  TrainResult result;
};

struct Comparison {
  Dataset data;
  double eps = 0.0;
  EpsSelection selection;
  MethodRun standard;
  MethodRun adversarial;
  std::vector<MethodRun> snr_sweep;
  std::size_t snr_index = 0;  // matched entry of snr_sweep
  bool snr_matched = false;
  std::vector<MethodRun> interpolation;

  const MethodRun& snr() const { return snr_sweep[snr_index]; }
};

// standard -> eps selection -> adversarial training -> dd-SNR lambda sweep matched on
// validation accuracy -> optional interpolation sweep at the matched lambda.
Comparison run_comparison(const ExperimentConfig& cfg, ExecPolicy policy);

}  // namespace onlab
