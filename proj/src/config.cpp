#include "onlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "onlab/csv.hpp"
#include "onlab/error.hpp"

namespace onlab {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  fail(ErrorKind::ConfigError, "bad value '" + value + "' for " + key + " (expected " + want + ")");
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) bad_value(key, v, "an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (x < 0) bad_value(key, v, "a nonnegative integer");
    }
    return static_cast<T>(x);
  } catch (const std::logic_error&) {
    bad_value(key, v, "an integer");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) bad_value(key, v, "a finite real");
    return x;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a finite real");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// Typed parse/show pairs.
void parse_into(const std::string& k, const std::string& v, std::string& out) {
  (void)k;
  out = v;
}
// The seed is a std::uint64_t and shares this overload.
static_assert(std::is_same_v<std::uint64_t, std::size_t>);
void parse_into(const std::string& k, const std::string& v, std::size_t& out) {
  out = parse_integer<std::size_t>(k, v);
}
void parse_into(const std::string& k, const std::string& v, int& out) { out = parse_integer<int>(k, v); }
void parse_into(const std::string& k, const std::string& v, long& out) { out = parse_integer<long>(k, v); }
void parse_into(const std::string& k, const std::string& v, double& out) { out = parse_real(k, v); }
void parse_into(const std::string& k, const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") out = true;
  else if (v == "false" || v == "0" || v == "no" || v == "off") out = false;
  else bad_value(k, v, "a boolean");
}
void parse_into(const std::string& k, const std::string& v, NormOrder& out) {
  try {
    out = NormOrder::parse(v);
  } catch (const Error&) {
    bad_value(k, v, "1, 2, inf or a real > 1");
  }
}
void parse_into(const std::string& k, const std::string& v, std::optional<double>& out) {
  if (v == "auto" || v.empty()) out.reset();
  else if (v == "inf") out = std::numeric_limits<double>::infinity();
  else out = parse_real(k, v);
}
void parse_into(const std::string& k, const std::string& v, std::vector<double>& out) {
  out.clear();
  for (const auto& s : split_list(v)) out.push_back(parse_real(k, s));
}
void parse_into(const std::string& k, const std::string& v, std::vector<std::size_t>& out) {
  out.clear();
  for (const auto& s : split_list(v)) out.push_back(parse_integer<std::size_t>(k, s));
}

std::string show(const std::string& v) { return v; }
std::string show(std::size_t v) { return std::to_string(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(long v) { return std::to_string(v); }
std::string show(double v) { return format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const NormOrder& v) { return v.to_string(); }
std::string show(const std::optional<double>& v) { return v ? format_double(*v) : "auto"; }
template <class T>
std::string show(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + show(v[i]);
  return s;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class S, class T>
Field field(const std::string& key, S ExperimentConfig::*sec, T S::*mem) {
  return {key, [=](ExperimentConfig& c, const std::string& v) { parse_into(key, v, c.*sec.*mem); },
          [=](const ExperimentConfig& c) { return show(c.*sec.*mem); }};
}

template <class T>
Field top(const std::string& key, T ExperimentConfig::*mem) {
  return {key, [=](ExperimentConfig& c, const std::string& v) { parse_into(key, v, c.*mem); },
          [=](const ExperimentConfig& c) { return show(c.*mem); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> f = {
      top("seed", &C::seed),
      top("threads", &C::threads),
      field("data.kind", &C::data, &DataSection::kind),
      field("data.n_per_class", &C::data, &DataSection::n_per_class),
      field("data.classes", &C::data, &DataSection::classes),
      field("data.dim", &C::data, &DataSection::dim),
      field("data.noise", &C::data, &DataSection::noise),
      field("data.feature_offset", &C::data, &DataSection::feature_offset),
      field("data.fine_noise_ratio", &C::data, &DataSection::fine_noise_ratio),
      field("data.path", &C::data, &DataSection::path),
      field("model.hidden", &C::model, &ModelSection::hidden),
      field("model.path", &C::model, &ModelSection::path),
      field("train.objective", &C::train, &TrainSection::objective),
      field("train.epochs", &C::train, &TrainSection::epochs),
      field("train.batch_size", &C::train, &TrainSection::batch_size),
      field("train.learning_rate", &C::train, &TrainSection::learning_rate),
      field("train.momentum", &C::train, &TrainSection::momentum),
      field("train.lambda", &C::train, &TrainSection::lambda),
      field("train.snr_variant", &C::train, &TrainSection::snr_variant),
      field("train.sos_eps", &C::train, &TrainSection::sos_eps),
      field("train.power_iters", &C::train, &TrainSection::power_iters),
      field("train.onr_p", &C::train, &TrainSection::onr_p),
      field("train.onr_q", &C::train, &TrainSection::onr_q),
      field("train.use_q_power", &C::train, &TrainSection::use_q_power),
      field("train.interp_t", &C::train, &TrainSection::interp_t),
      field("train.at_weight", &C::train, &TrainSection::at_weight),
      field("attack.p", &C::attack, &AttackSection::p),
      field("attack.eps", &C::attack, &AttackSection::eps),
      field("attack.iterations", &C::attack, &AttackSection::iterations),
      field("attack.alpha", &C::attack, &AttackSection::alpha),
      field("attack.loss", &C::attack, &AttackSection::loss),
      field("attack.q", &C::attack, &AttackSection::q),
      field("attack.beta", &C::attack, &AttackSection::beta),
      field("attack.random_init", &C::attack, &AttackSection::random_init),
      field("attack.target", &C::attack, &AttackSection::target),
      field("attack.use_predicted_label", &C::attack, &AttackSection::use_predicted_label),
      field("attack.normalize_u", &C::attack, &AttackSection::normalize_u),
      field("analysis.layer", &C::analysis, &AnalysisSection::layer),
      field("analysis.test_points", &C::analysis, &AnalysisSection::test_points),
      field("analysis.radii", &C::analysis, &AnalysisSection::radii),
      field("analysis.eps_grid", &C::analysis, &AnalysisSection::eps_grid),
      field("analysis.activation_eps", &C::analysis, &AnalysisSection::activation_eps),
      field("analysis.method_label", &C::analysis, &AnalysisSection::method_label),
      field("analysis.select_lo", &C::analysis, &AnalysisSection::select_lo),
      field("analysis.select_factor", &C::analysis, &AnalysisSection::select_factor),
      field("analysis.select_count", &C::analysis, &AnalysisSection::select_count),
      field("analysis.select_max_acc", &C::analysis, &AnalysisSection::select_max_acc),
      field("analysis.lambda_grid", &C::analysis, &AnalysisSection::lambda_grid),
      field("analysis.match_tolerance", &C::analysis, &AnalysisSection::match_tolerance),
      field("analysis.interpolation", &C::analysis, &AnalysisSection::interpolation),
      field("analysis.interp_grid", &C::analysis, &AnalysisSection::interp_grid),
      field("analysis.verify_points", &C::analysis, &AnalysisSection::verify_points),
      field("analysis.verify_iters", &C::analysis, &AnalysisSection::verify_iters),
      field("analysis.in_cell_fraction", &C::analysis, &AnalysisSection::in_cell_fraction),
  };
  return f;
}

void check_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> ok) {
  for (const char* o : ok)
    if (v == o) return;
  std::string all;
  for (const char* o : ok) all += std::string(all.empty() ? "" : "|") + o;
  fail(ErrorKind::ConfigError, "bad value '" + v + "' for " + key + " (expected " + all + ")");
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::ConfigError, what);
}

void validate(const ExperimentConfig& c) {
  check_one_of("data.kind", c.data.kind, {"blobs", "moons", "rings"});
  require(c.data.n_per_class >= 1, "data.n_per_class must be >= 1");
  require(c.data.classes >= 2, "data.classes must be >= 2");
  require(c.data.dim >= 2, "data.dim must be >= 2");
  require(c.data.noise >= 0.0, "data.noise must be >= 0");
  require(c.threads >= 0, "threads must be >= 0");
  for (std::size_t h : c.model.hidden) require(h >= 1, "model.hidden widths must be >= 1");
  check_one_of("train.objective", c.train.objective,
               {"standard", "adversarial", "global_snr", "dd_snr", "dd_onr", "interpolated"});
  check_one_of("train.snr_variant", c.train.snr_variant, {"sigma_squared", "sum_of_squares"});
  require(c.train.epochs >= 0, "train.epochs must be >= 0");
  require(c.train.batch_size >= 1, "train.batch_size must be >= 1");
  require(c.train.learning_rate >= 0.0, "train.learning_rate must be >= 0");
  require(c.train.momentum >= 0.0 && c.train.momentum < 1.0, "train.momentum must lie in [0, 1)");
  require(c.train.lambda >= 0.0, "train.lambda must be >= 0");
  require(c.train.power_iters >= 1, "train.power_iters must be >= 1");
  require(c.train.interp_t >= 0.0 && c.train.interp_t <= 1.0, "train.interp_t must lie in [0, 1]");
  require(c.train.at_weight >= 0.0, "train.at_weight must be >= 0");
  require(c.train.sos_eps >= 0.0, "train.sos_eps must be >= 0");
  require(!c.attack.p.is_finite_general(), "attack.p must be 1, 2 or inf");
  require(c.attack.eps >= 0.0, "attack.eps must be >= 0");
  require(c.attack.iterations >= 1, "attack.iterations must be >= 1");
  require(!c.attack.alpha || *c.attack.alpha > 0.0, "attack.alpha must be positive");
  check_one_of("attack.loss", c.attack.loss, {"ce", "lq"});
  require(c.attack.beta > 0.0, "attack.beta must be positive");
  check_one_of("analysis.layer", c.analysis.layer, {"last_hidden", "logits"});
  require(c.analysis.test_points >= 1, "analysis.test_points must be >= 1");
  require(c.analysis.select_lo > 0.0 && c.analysis.select_factor > 1.0 && c.analysis.select_count >= 1,
          "bad eps selection grid");
  require(!c.analysis.lambda_grid.empty(), "analysis.lambda_grid must not be empty");
  for (double t : c.analysis.interp_grid) require(t >= 0.0 && t <= 1.0, "interp_grid entries must lie in [0, 1]");
  require(c.analysis.verify_iters >= 1, "analysis.verify_iters must be >= 1");
  require(c.analysis.in_cell_fraction > 0.0 && c.analysis.in_cell_fraction < 1.0,
          "analysis.in_cell_fraction must lie in (0, 1)");
  for (const std::string* p : {&c.data.path, &c.model.path})
    require(p->empty() || std::filesystem::exists(*p), "referenced file does not exist: " + *p);
}

ExperimentConfig from_tree(const boost::property_tree::ptree& pt, const std::vector<Override>& overrides) {
  ExperimentConfig cfg;
  for (const auto& [name, node] : pt) {
    if (node.empty()) {
      apply_override(cfg, name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) fail(ErrorKind::ConfigError, "nested key " + name + "." + key);
      apply_override(cfg, name + "." + key, leaf.data());
    }
  }
  for (const auto& [k, v] : overrides) apply_override(cfg, k, v);
  validate(cfg);
  return cfg;
}

}  // namespace

Override parse_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorKind::ConfigError, "override must look like section.key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

void apply_override(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value) {
  for (const Field& f : fields())
    if (f.key == dotted_key) {
      f.set(cfg, value);
      return;
    }
  fail(ErrorKind::ConfigError, "unknown config key '" + dotted_key + "'");
}

ExperimentConfig config_from_string(const std::string& ini, const std::vector<Override>& overrides) {
  boost::property_tree::ptree pt;
  std::istringstream in(ini);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorKind::ConfigError, std::string("malformed config: ") + e.what());
  }
  return from_tree(pt, overrides);
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::IoError, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_string(ss.str(), overrides);
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string s;
  for (const Field& f : fields()) s += f.key + "=" + f.get(cfg) + "\n";
  return s;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const Field& f : fields()) k.push_back(f.key);
  return k;
}

}  // namespace onlab
