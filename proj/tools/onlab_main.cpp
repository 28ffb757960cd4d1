// Experiment runner: every subcommand writes CSVs plus manifest.json into --out.
#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "onlab/config.hpp"
#include "onlab/csv.hpp"
#include "onlab/error.hpp"
#include "onlab/experiment.hpp"
#include "onlab/serialize.hpp"

#ifndef ONLAB_VERSION
#define ONLAB_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace onlab;

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  int threads = -1;
  std::string out = "out";
  std::string analyze_kind;
};

std::string sha256_hex(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::IoError, "sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

ExperimentConfig resolve_config(const Options& o) {
  std::vector<Override> ov;
  for (const auto& s : o.sets) ov.push_back(parse_override(s));
  ExperimentConfig cfg = o.config_path.empty() ? config_from_string("", ov) : load_config(o.config_path, ov);
  if (o.threads >= 0) cfg.threads = o.threads;
  set_thread_count(cfg.threads);
  return cfg;
}

// Outputs must not depend on the worker count, so neither does the provenance.
void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const std::vector<std::string>& outputs, nlohmann::ordered_json extra = {}) {
  ExperimentConfig hashed = cfg;
  hashed.threads = 0;
  const std::string text = canonical_text(hashed);
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (line.substr(0, eq) != "threads") config[line.substr(0, eq)] = line.substr(eq + 1);
  }
  nlohmann::ordered_json m;
  m["command"] = command;
  m["config_sha256"] = sha256_hex(text);
  m["seed"] = cfg.seed;
  m["versions"] = {{"onlab", ONLAB_VERSION},
                   {"network_format", kNetworkFormatVersion},
                   {"cli11", CLI11_VERSION},
                   {"compiler", __VERSION__}};
  m["outputs"] = outputs;
  if (!extra.is_null()) m["results"] = extra;
  m["config"] = config;
  std::ofstream f(dir / "manifest.json");
  f << m.dump(2) << "\n";
  if (!f) fail(ErrorKind::IoError, "cannot write " + (dir / "manifest.json").string());
}

fs::path prepare_out(const Options& o) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create output directory " + o.out);
  return o.out;
}

Network require_model(const ExperimentConfig& cfg) {
  if (cfg.model.path.empty()) fail(ErrorKind::ConfigError, "model.path is required");
  return load_network(cfg.model.path);
}

std::string method_label(const ExperimentConfig& cfg) {
  return cfg.analysis.method_label.empty() ? cfg.train.objective : cfg.analysis.method_label;
}

void cmd_gen_data(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  save_dataset_csv(make_dataset(cfg), (dir / "dataset.csv").string());
  write_manifest(dir, "gen-data", cfg, {"dataset.csv"});
}

void cmd_train(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const Dataset data = make_dataset(cfg);
  const Objective obj = make_objective(cfg, cfg.train.objective, cfg.train.lambda, cfg.attack.eps);
  const TrainResult r = train_model(cfg, data, obj, ExecPolicy::Parallel);
  save_network(r.net, (dir / "network.onlb").string());
  write_metrics_csv((dir / "metrics.csv").string(), r.metrics);
  write_manifest(dir, "train", cfg, {"network.onlb", "metrics.csv"},
                 {{"skipped_examples", r.skipped_examples}});
}

void cmd_attack(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const Network net = require_model(cfg);
  const LabeledSet pts = test_points(cfg, make_dataset(cfg));
  std::vector<std::uint64_t> seeds(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) seeds[i] = derive_seed(cfg.seed, 0, i, SeedPurpose::AttackInit);
  const auto res = batch_attack(net, pts.inputs, pts.labels, attack_config(cfg, cfg.attack.eps), seeds,
                                ExecPolicy::Parallel);
  std::vector<std::string> header{"sample_id", "label", "clean_pred", "adv_pred", "success", "distance"};
  for (std::size_t j = 0; j < net.input_dim(); ++j) header.push_back("x" + std::to_string(j));
  CsvWriter w((dir / "adversarial.csv").string(), header);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w.cell(i).cell(pts.labels[i]).cell(predict(net, pts.inputs[i])).cell(predict(net, res[i].x_star));
    w.cell(res[i].success ? 1 : 0).cell(norm2(sub(res[i].x_star, pts.inputs[i])));
    for (double v : res[i].x_star) w.cell(v);
    w.end_row();
  }
  w.close();
  write_manifest(dir, "attack", cfg, {"adversarial.csv"});
}

void cmd_analyze(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const Network net = require_model(cfg);
  const Dataset data = make_dataset(cfg);
  const LabeledSet pts = test_points(cfg, data);
  const double eps = cfg.attack.eps;
  const std::string& k = o.analyze_kind;
  const std::string file = k + ".csv", path = (dir / file).string();
  const ExecPolicy par = ExecPolicy::Parallel;
  if (k == "spectrum") write_spectrum_csv(path, spectrum_rows(cfg, net, pts, par));
  else if (k == "alignment") write_alignment_csv(path, alignment_rows(cfg, net, pts, eps, par));
  else if (k == "linearity") write_linearity_csv(path, linearity_rows(cfg, net, pts, eps, par));
  else if (k == "topsv") write_topsv_csv(path, topsv_rows(cfg, net, pts, eps, par));
  else if (k == "activations")
    write_activations_csv(path, activation_rows(cfg, net, pts, box_radius(data), eps, par));
  else if (k == "accuracy")
    write_accuracy_csv(path, accuracy_rows(cfg, method_label(cfg), net, data.subset(Split::Test), eps, par));
  else fail(ErrorKind::ConfigError, "unknown analysis '" + k + "'");
  write_manifest(dir, "analyze " + k, cfg, {file});
}

// Test points when a dataset matches the net, otherwise standard normal draws.
std::vector<Vec> verification_points(const ExperimentConfig& cfg, const Network& net) {
  const std::size_t n = cfg.analysis.verify_points;
  if (!cfg.data.path.empty()) {
    LabeledSet te = make_dataset(cfg).subset(Split::Test);
    if (te.size() > 0 && te.inputs[0].size() == net.input_dim()) {
      te.inputs.resize(std::min(n, te.size()));
      return te.inputs;
    }
  }
  std::vector<Vec> pts(n, Vec(net.input_dim()));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(cfg.seed, 0, i, SeedPurpose::Probe));
    std::normal_distribution<double> g;
    for (double& v : pts[i]) v = g(rng);
  }
  return pts;
}

void cmd_verify(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const Network net = require_model(cfg);
  const auto rows = equivalence_rows(cfg, net, verification_points(cfg, net), ExecPolicy::Parallel);
  write_equivalence_csv((dir / "equivalence.csv").string(), rows);
  std::size_t in_cell = 0, agree = 0;
  for (const auto& r : rows)
    if (r.in_cell) {
      ++in_cell;
      agree += r.cosine >= 1.0 - 1e-9;
    }
  write_manifest(dir, "verify-theorem1", cfg, {"equivalence.csv"},
                 {{"rows", rows.size()}, {"in_cell_rows", in_cell}, {"in_cell_agreeing", agree}});
}

void write_method(const ExperimentConfig& cfg, const fs::path& root, const std::string& name,
                  const MethodRun& m, const Comparison& c, std::vector<AccuracyRow>& all_acc,
                  std::vector<std::string>& outputs) {
  const fs::path dir = root / name;
  fs::create_directories(dir);
  const ExecPolicy par = ExecPolicy::Parallel;
  const Network& net = m.result.net;
  const LabeledSet pts = test_points(cfg, c.data);
  save_network(net, (dir / "network.onlb").string());
  write_metrics_csv((dir / "metrics.csv").string(), m.result.metrics);
  write_spectrum_csv((dir / "spectrum.csv").string(), spectrum_rows(cfg, net, pts, par));
  write_alignment_csv((dir / "alignment.csv").string(), alignment_rows(cfg, net, pts, c.eps, par));
  write_linearity_csv((dir / "linearity.csv").string(), linearity_rows(cfg, net, pts, c.eps, par));
  write_topsv_csv((dir / "topsv.csv").string(), topsv_rows(cfg, net, pts, c.eps, par));
  write_activations_csv((dir / "activations.csv").string(),
                        activation_rows(cfg, net, pts, box_radius(c.data), c.eps, par));
  const auto acc = accuracy_rows(cfg, name, net, c.data.subset(Split::Test), c.eps, par);
  write_accuracy_csv((dir / "accuracy.csv").string(), acc);
  all_acc.insert(all_acc.end(), acc.begin(), acc.end());
  for (const char* f : {"network.onlb", "metrics.csv", "spectrum.csv", "alignment.csv", "linearity.csv",
                        "topsv.csv", "activations.csv", "accuracy.csv"})
    outputs.push_back(name + "/" + f);
}

void cmd_sweep(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const Comparison c = run_comparison(cfg, ExecPolicy::Parallel);
  std::vector<AccuracyRow> all_acc;
  std::vector<std::string> outputs{"accuracy.csv", "sweep.csv"};
  write_method(cfg, dir, "standard", c.standard, c, all_acc, outputs);
  write_method(cfg, dir, "adversarial", c.adversarial, c, all_acc, outputs);
  write_method(cfg, dir, "dd_snr", c.snr(), c, all_acc, outputs);
  for (const MethodRun& m : c.interpolation)
    write_method(cfg, dir, "interpolated_t" + format_double(m.t), m, c, all_acc, outputs);
  write_accuracy_csv((dir / "accuracy.csv").string(), all_acc);

  CsvWriter w((dir / "sweep.csv").string(), {"method", "lambda", "t", "eps", "val_acc", "test_acc", "selected"});
  const auto row = [&](const MethodRun& m, bool selected) {
    w.cell(m.method).cell(m.lambda).cell(m.t).cell(c.eps).cell(m.val_acc);
    w.cell(m.result.metrics.back().clean_acc).cell(selected ? 1 : 0);
    w.end_row();
  };
  row(c.standard, true);
  row(c.adversarial, true);
  for (std::size_t i = 0; i < c.snr_sweep.size(); ++i) row(c.snr_sweep[i], i == c.snr_index);
  for (const MethodRun& m : c.interpolation) row(m, true);
  w.close();
  write_manifest(dir, "sweep", cfg, outputs,
                 {{"eps", c.eps},
                  {"eps_found", c.selection.found},
                  {"lambda", c.snr().lambda},
                  {"lambda_matched", c.snr_matched}});
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidKind:
      return 2;
    case ErrorKind::IoError:
    case ErrorKind::FormatError:
      return 4;
    default:
      return 3;
  }
}

int report(const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json e;
  e["error"] = kind;
  e["message"] = message;
  e["exit_code"] = code;
  std::cerr << e.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-norm regularization experiments"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "section.key=value override (repeatable)");
    sub->add_option("--threads", o.threads, "worker cap (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "output directory");
  };
  std::map<std::string, void (*)(const Options&)> handlers{
      {"gen-data", cmd_gen_data}, {"train", cmd_train}, {"attack", cmd_attack},
      {"analyze", cmd_analyze}, {"verify-theorem1", cmd_verify}, {"sweep", cmd_sweep}};
  const std::map<std::string, std::string> help{
      {"gen-data", "write the dataset as CSV"},
      {"train", "train one model (train.objective)"},
      {"attack", "attack test points with the loaded model"},
      {"analyze", "per-model analyses of the loaded model"},
      {"verify-theorem1", "compare alpha=inf PGA with the power-method limit"},
      {"sweep", "standard / adversarial / dd-SNR comparison with eps and lambda selection"}};
  for (const auto& [name, fn] : handlers) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    common(sub);
    if (name == "analyze")
      sub->add_option("kind", o.analyze_kind, "analysis to run")
          ->required()
          ->check(CLI::IsMember({"spectrum", "alignment", "linearity", "topsv", "activations", "accuracy"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("ConfigError", e.what(), 2);
  }

  try {
    for (const auto& [name, fn] : handlers)
      if (app.got_subcommand(name)) fn(o);
  } catch (const Error& e) {
    return report(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const fs::filesystem_error& e) {
    return report("IoError", e.what(), 4);
  } catch (const std::exception& e) {
    return report("InternalError", e.what(), 3);
  }
  return 0;
}
