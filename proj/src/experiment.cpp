#include "onlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "onlab/csv.hpp"
#include "onlab/error.hpp"
#include "onlab/opnorm.hpp"
#include "onlab/random.hpp"

namespace onlab {

namespace {

// Independent random streams hanging off the global seed.
enum Stream : std::uint64_t {
  kData = 1,
  kInit = 2,
  kTrain = 3,
  kSelect = 4,
  kAccuracy = 5,
  kAdvDir = 6,
  kRandDir = 7,
  kActivation = 8,
  kVerify = 9,
  kOffManifold = 10,
};

std::uint64_t stream(const ExperimentConfig& cfg, Stream s) { return derive_seed(cfg.seed, s); }

std::vector<double> multiples(double eps, int count, double step) {
  std::vector<double> out;
  for (int i = 0; i <= count; ++i) out.push_back(eps * step * i);
  return out;
}

Vec unit(Vec v) {
  const double n = norm2(v);
  if (n == 0.0) return {};
  for (double& x : v) x /= n;
  return v;
}

template <class Row>
std::vector<Row> flatten(std::vector<std::vector<Row>>& parts) {
  std::vector<Row> out;
  for (auto& p : parts)
    for (auto& r : p) out.push_back(std::move(r));
  return out;
}

}  // namespace

MapLayer parse_map_layer(const std::string& s) {
  if (s == "last_hidden") return MapLayer::LastHidden;
  if (s == "logits") return MapLayer::Logits;
  fail(ErrorKind::ConfigError, "unknown analysis layer '" + s + "'");
}

Dataset make_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data.path.empty()) return load_dataset_csv(cfg.data.path);
  SyntheticParams s;
  s.kind = parse_synthetic_kind(cfg.data.kind);
  s.n_per_class = cfg.data.n_per_class;
  s.classes = cfg.data.classes;
  s.dim = cfg.data.dim;
  s.noise = cfg.data.noise;
  s.feature_offset = cfg.data.feature_offset;
  s.fine_noise_ratio = cfg.data.fine_noise_ratio;
  s.seed = stream(cfg, kData);
  return gen_synthetic(s);
}

Network init_network(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t classes) {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  widths.push_back(classes);
  return Network::random(widths, stream(cfg, kInit));
}

AttackConfig attack_config(const ExperimentConfig& cfg, double eps) {
  const AttackSection& a = cfg.attack;
  AttackConfig c;
  c.p = a.p;
  c.eps = eps;
  c.alpha = a.alpha;
  c.iterations = a.iterations;
  if (a.loss == "lq") c.loss = LogitLqLoss{a.q};
  else c.loss = CrossEntropyLoss{a.beta};
  if (a.target >= 0) c.target = static_cast<std::size_t>(a.target);
  c.random_init = a.random_init;
  c.normalize_u = a.normalize_u;
  c.use_predicted_label = a.use_predicted_label;
  return c;
}

Objective make_objective(const ExperimentConfig& cfg, const std::string& method, double lambda,
                         double eps) {
  const TrainSection& t = cfg.train;
  const auto snr = [&] {
    DataDepSnrObjective o;
    o.weight = lambda;
    o.variant = t.snr_variant == "sum_of_squares" ? SnrVariant::SumOfSquares : SnrVariant::SigmaSquared;
    o.eps = t.sos_eps > 0.0 ? t.sos_eps : eps;
    o.power_iters = t.power_iters;
    return o;
  };
  const auto at = [&] { return AdversarialObjective{attack_config(cfg, eps), t.at_weight}; };
  if (method == "standard") return StandardObjective{};
  if (method == "adversarial") return at();
  if (method == "global_snr") return GlobalSnrObjective{lambda, 1};
  if (method == "dd_snr") return snr();
  if (method == "dd_onr") return DataDepOnrObjective{lambda, t.onr_p, t.onr_q, t.power_iters, t.use_q_power};
  if (method == "interpolated") return InterpolatedObjective{t.interp_t, at(), snr()};
  fail(ErrorKind::ConfigError, "unknown objective '" + method + "'");
}

TrainResult train_model(const ExperimentConfig& cfg, const Dataset& data, const Objective& obj,
                        ExecPolicy policy) {
  TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.batch_size = cfg.train.batch_size;
  tc.learning_rate = cfg.train.learning_rate;
  tc.momentum = cfg.train.momentum;
  tc.seed = stream(cfg, kTrain);
  tc.objective = obj;
  tc.policy = policy;
  const LabeledSet tr = data.subset(Split::Train), te = data.subset(Split::Test);
  if (tr.size() == 0) fail(ErrorKind::ConfigError, "dataset has no training rows");
  std::vector<Vec> probe(te.inputs.begin(),
                         te.inputs.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(64, te.size())));
  return train(init_network(cfg, data.dim(), data.classes), tr, te, probe, tc);
}

EpsSelection select_eps(const ExperimentConfig& cfg, const Network& net, const Dataset& data,
                        ExecPolicy policy) {
  const AnalysisSection& a = cfg.analysis;
  std::vector<double> grid;
  for (int i = 0; i < a.select_count; ++i) grid.push_back(a.select_lo * std::pow(a.select_factor, i));
  EpsSelection sel;
  sel.curve = robust_accuracy_curve(net, data.subset(Split::Val), grid, attack_config(cfg, grid[0]),
                                    stream(cfg, kSelect), policy);
  sel.eps = grid.back();
  for (const AccuracyPoint& p : sel.curve)
    if (p.accuracy <= a.select_max_acc) {
      sel.eps = p.eps;
      sel.found = true;
      break;
    }
  return sel;
}

std::vector<double> radii_for(const ExperimentConfig& cfg, double eps) {
  return cfg.analysis.radii.empty() ? multiples(eps, 20, 0.1) : cfg.analysis.radii;
}
std::vector<double> eps_grid_for(const ExperimentConfig& cfg, double eps) {
  return cfg.analysis.eps_grid.empty() ? multiples(eps, 16, 0.125) : cfg.analysis.eps_grid;
}
std::vector<double> activation_eps_for(const ExperimentConfig& cfg, double eps) {
  return cfg.analysis.activation_eps.empty() ? multiples(eps, 8, 0.25) : cfg.analysis.activation_eps;
}

LabeledSet test_points(const ExperimentConfig& cfg, const Dataset& data) {
  LabeledSet te = data.subset(Split::Test);
  const std::size_t n = std::min(cfg.analysis.test_points, te.size());
  te.inputs.resize(n);
  te.labels.resize(n);
  return te;
}

double box_radius(const Dataset& data) {
  double r = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.splits[i] == Split::Train)
      for (double v : data.inputs[i]) r = std::max(r, std::fabs(v));
  return r;
}

std::vector<Vec> adversarial_directions(const ExperimentConfig& cfg, const Network& net,
                                        const LabeledSet& pts, double eps, ExecPolicy policy) {
  const std::size_t n = pts.size();
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = derive_seed(stream(cfg, kAdvDir), 0, i, SeedPurpose::AttackInit);
  const auto res = batch_attack(net, pts.inputs, pts.labels, attack_config(cfg, eps), seeds, policy);
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = unit(sub(res[i].x_star, pts.inputs[i]));
  return out;
}

std::vector<Vec> random_directions(const ExperimentConfig& cfg, std::size_t count, std::size_t dim) {
  std::vector<Vec> out(count, Vec(dim));
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(stream(cfg, kRandDir), 0, i, SeedPurpose::Probe));
    std::normal_distribution<double> g;
    for (double& v : out[i]) v = g(rng);
    out[i] = unit(out[i]);
  }
  return out;
}

std::vector<SpectrumRow> spectrum_rows(const ExperimentConfig& cfg, const Network& net,
                                       const LabeledSet& pts, ExecPolicy policy) {
  const MapLayer layer = parse_map_layer(cfg.analysis.layer);
  std::vector<std::vector<SpectrumRow>> parts(pts.size());
  for_each_index(pts.size(), policy, [&](std::size_t i) {
    const Vec s = singular_spectrum(net, pts.inputs[i], layer);
    for (std::size_t r = 0; r < s.size(); ++r) parts[i].push_back({i, r + 1, s[r]});
  });
  return flatten(parts);
}

std::vector<AlignmentRow> alignment_rows(const ExperimentConfig& cfg, const Network& net,
                                         const LabeledSet& pts, double eps, ExecPolicy policy) {
  const MapLayer layer = parse_map_layer(cfg.analysis.layer);
  const auto dirs = adversarial_directions(cfg, net, pts, eps, policy);
  std::vector<std::vector<AlignmentRow>> parts(pts.size());
  for_each_index(pts.size(), policy, [&](std::size_t i) {
    if (dirs[i].empty()) return;
    const Vec c = alignment_curve(dirs[i], net, pts.inputs[i], layer);
    for (std::size_t r = 0; r < c.size(); ++r) parts[i].push_back({i, r + 1, c[r]});
  });
  return flatten(parts);
}

namespace {

template <class F>
std::vector<CurveRow> curve_rows(const ExperimentConfig& cfg, const Network& net, const LabeledSet& pts,
                                 double eps, ExecPolicy policy, F&& curve) {
  const MapLayer layer = parse_map_layer(cfg.analysis.layer);
  const std::vector<double> radii = radii_for(cfg, eps);
  const auto adv = adversarial_directions(cfg, net, pts, eps, policy);
  const auto rnd = random_directions(cfg, pts.size(), net.input_dim());
  std::vector<std::vector<CurveRow>> parts(pts.size());
  for_each_index(pts.size(), policy, [&](std::size_t i) {
    for (const auto& [kind, dir] : {std::pair<const char*, const Vec*>{"adversarial", &adv[i]},
                                    std::pair<const char*, const Vec*>{"random", &rnd[i]}}) {
      if (dir->empty()) continue;
      for (const RadiusValue& rv : curve(net, pts.inputs[i], *dir, radii, layer))
        parts[i].push_back({i, kind, rv.radius, rv.value});
    }
  });
  return flatten(parts);
}

}  // namespace

std::vector<CurveRow> linearity_rows(const ExperimentConfig& cfg, const Network& net,
                                     const LabeledSet& pts, double eps, ExecPolicy policy) {
  return curve_rows(cfg, net, pts, eps, policy,
                    [](auto&&... a) { return linearity_deviation(a...); });
}

std::vector<CurveRow> topsv_rows(const ExperimentConfig& cfg, const Network& net,
                                 const LabeledSet& pts, double eps, ExecPolicy policy) {
  return curve_rows(cfg, net, pts, eps, policy,
                    [](auto&&... a) { return top_sv_over_distance(a...); });
}

std::vector<ActivationRow> activation_rows(const ExperimentConfig& cfg, const Network& net,
                                           const LabeledSet& pts, double box, double eps,
                                           ExecPolicy policy) {
  const std::size_t n = pts.size(), dim = net.input_dim();
  std::vector<Vec> off(n, Vec(dim)), dirs(n, Vec(dim));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(stream(cfg, kOffManifold), 0, i, SeedPurpose::Probe));
    std::uniform_real_distribution<double> u(-box, box);
    for (double& v : off[i]) v = u(rng);
    Rng rz(derive_seed(stream(cfg, kActivation), 0, i, SeedPurpose::Probe));
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    for (double& v : dirs[i]) v = c(rz);
    dirs[i] = unit(dirs[i]);
  }
  std::vector<ActivationRow> out;
  for (const auto& [kind, bases] : {std::pair<const char*, const std::vector<Vec>*>{"data", &pts.inputs},
                                    std::pair<const char*, const std::vector<Vec>*>{"off_manifold", &off}}) {
    for (double e : activation_eps_for(cfg, eps)) {
      Vec frac(n, 1.0);
      for_each_index(n, policy, [&](std::size_t i) {
        if (!dirs[i].empty()) frac[i] = shared_activation_fraction(net, (*bases)[i], scaled(dirs[i], e));
      });
      const MeanSe m = mean_se(frac);
      out.push_back({kind, e, m.mean, m.se});
    }
  }
  return out;
}

std::vector<AccuracyRow> accuracy_rows(const ExperimentConfig& cfg, const std::string& method,
                                       const Network& net, const LabeledSet& pts, double eps,
                                       ExecPolicy policy) {
  const auto curve = robust_accuracy_curve(net, pts, eps_grid_for(cfg, eps), attack_config(cfg, eps),
                                           stream(cfg, kAccuracy), policy);
  std::vector<AccuracyRow> out;
  for (const AccuracyPoint& p : curve) out.push_back({method, p.eps, p.accuracy, p.stderr_});
  return out;
}

std::vector<EquivalenceRow> equivalence_rows(const ExperimentConfig& cfg, const Network& net,
                                             const std::vector<Vec>& points, ExecPolicy policy) {
  const std::vector<NormOrder> norms{NormOrder::one(), NormOrder::two(), NormOrder::infinity()};
  std::vector<std::vector<EquivalenceRow>> parts(points.size());
  for_each_index(points.size(), policy, [&](std::size_t i) {
    const Vec& x = points[i];
    for (std::size_t a = 0; a < 3; ++a) {
      const double r = in_cell_radius(net, x, norms[a]);
      if (!(r > 0.0)) continue;
      const double eps = std::isinf(r) ? 1.0 : cfg.analysis.in_cell_fraction * r;
      for (std::size_t b = 0; b < 3; ++b) {
        Rng rng(derive_seed(stream(cfg, kVerify), a * 3 + b, i, SeedPurpose::PowerInit));
        const Vec v0 = random_unit_vector(net.input_dim(), norms[a], rng);
        const EquivalenceReport rep =
            verify_theorem1(net, x, norms[a], norms[b], eps, cfg.analysis.verify_iters, v0);
        for (std::size_t k = 0; k < rep.cosines.size(); ++k)
          parts[i].push_back({i, norms[a].to_string(), norms[b].to_string(), eps, static_cast<int>(k + 1),
                              rep.cosines[k], rep.in_cell[k] != 0, rep.sigma_pga[k], rep.sigma_power[k]});
      }
    }
  });
  return flatten(parts);
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows) {
  CsvWriter w(path, {"epoch", "objective", "clean_acc", "probe_sigma_mean"});
  for (const auto& r : rows) {
    w.cell(r.epoch).cell(r.objective).cell(r.clean_acc).cell(r.probe_sigma_mean);
    w.end_row();
  }
  w.close();
}

void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows) {
  CsvWriter w(path, {"sample_id", "rank", "sigma"});
  for (const auto& r : rows) {
    w.cell(r.sample_id).cell(r.rank).cell(r.sigma);
    w.end_row();
  }
  w.close();
}

void write_alignment_csv(const std::string& path, const std::vector<AlignmentRow>& rows) {
  CsvWriter w(path, {"sample_id", "rank", "cosine"});
  for (const auto& r : rows) {
    w.cell(r.sample_id).cell(r.rank).cell(r.cosine);
    w.end_row();
  }
  w.close();
}

void write_linearity_csv(const std::string& path, const std::vector<CurveRow>& rows) {
  CsvWriter w(path, {"sample_id", "direction_kind", "radius", "deviation"});
  for (const auto& r : rows) {
    w.cell(r.sample_id).cell(r.direction_kind).cell(r.radius).cell(r.value);
    w.end_row();
  }
  w.close();
}

void write_topsv_csv(const std::string& path, const std::vector<CurveRow>& rows) {
  CsvWriter w(path, {"sample_id", "direction_kind", "radius", "sigma"});
  for (const auto& r : rows) {
    w.cell(r.sample_id).cell(r.direction_kind).cell(r.radius).cell(r.value);
    w.end_row();
  }
  w.close();
}

void write_activations_csv(const std::string& path, const std::vector<ActivationRow>& rows) {
  CsvWriter w(path, {"base_kind", "eps", "shared_fraction_mean", "stderr"});
  for (const auto& r : rows) {
    w.cell(r.base_kind).cell(r.eps).cell(r.mean).cell(r.stderr_);
    w.end_row();
  }
  w.close();
}

void write_accuracy_csv(const std::string& path, const std::vector<AccuracyRow>& rows) {
  CsvWriter w(path, {"method", "eps", "accuracy", "stderr"});
  for (const auto& r : rows) {
    w.cell(r.method).cell(r.eps).cell(r.accuracy).cell(r.stderr_);
    w.end_row();
  }
  w.close();
}

void write_equivalence_csv(const std::string& path, const std::vector<EquivalenceRow>& rows) {
  CsvWriter w(path, {"sample_id", "p", "q", "eps", "iter", "cosine", "in_cell", "sigma_pga", "sigma_power"});
  for (const auto& r : rows) {
    w.cell(r.sample_id).cell(r.p).cell(r.q).cell(r.eps).cell(r.iter).cell(r.cosine).cell(r.in_cell ? 1 : 0);
    w.cell(r.sigma_pga).cell(r.sigma_power);
    w.end_row();
  }
  w.close();
}

Comparison run_comparison(const ExperimentConfig& cfg, ExecPolicy policy) {
  Comparison c;
  c.data = make_dataset(cfg);
  const LabeledSet val = c.data.subset(Split::Val);
  const auto run = [&](const std::string& method, double lambda, double t) {
    ExperimentConfig local = cfg;
    local.train.interp_t = t;
    MethodRun m;
    m.method = method;
    m.lambda = lambda;
    m.t = t;
    m.result = train_model(local, c.data, make_objective(local, method, lambda, c.eps), policy);
    m.val_acc = batch_accuracy(m.result.net, val.inputs, val.labels, policy);
    return m;
  };

  c.standard = run("standard", 0.0, 0.0);
  c.selection = select_eps(cfg, c.standard.result.net, c.data, policy);
  c.eps = c.selection.eps;
  c.adversarial = run("adversarial", 0.0, 0.0);

  std::vector<SweepPoint> points;
  for (double lambda : cfg.analysis.lambda_grid) {
    c.snr_sweep.push_back(run("dd_snr", lambda, 0.0));
    points.push_back({lambda, c.snr_sweep.back().val_acc});
  }
  c.snr_index = select_matched_lambda(points, c.adversarial.val_acc, cfg.analysis.match_tolerance);
  c.snr_matched = c.snr_index < points.size();
  if (!c.snr_matched) {
    c.snr_index = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
      if (std::fabs(points[i].val_acc - c.adversarial.val_acc) <
          std::fabs(points[c.snr_index].val_acc - c.adversarial.val_acc))
        c.snr_index = i;
  }

  if (cfg.analysis.interpolation)
    for (double t : cfg.analysis.interp_grid) c.interpolation.push_back(run("interpolated", c.snr().lambda, t));
  return c;
}

}  // namespace onlab
