#include "onlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "onlab/error.hpp"
#include "onlab/opnorm.hpp"
#include "onlab/random.hpp"
#include "onlab/svd.hpp"

namespace onlab {

RegressionJacobian extract_jacobian_regression(const Network& net, const Vec& x,
                                               std::size_t n_samples, double noise_scale,
                                               std::uint64_t seed) {
  const std::size_t n = net.input_dim(), d = net.output_dim();
  require_dims(x.size(), n, "regression base point");
  if (n_samples < n + 1)
    fail(ErrorKind::RankDeficient, "need at least n+1 probes for an affine fit");
  if (!(noise_scale > 0.0)) fail(ErrorKind::ConfigError, "noise_scale must be positive");

  Rng rng(seed);
  std::normal_distribution<double> g;
  const ActivationPattern base = activation_pattern(net, x);
  std::vector<Vec> dz(n_samples, Vec(n)), ys(n_samples);
  RegressionJacobian out;
  out.all_in_cell = true;
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (double& v : dz[i]) v = g(rng);
    Vec xi = x;
    axpy(noise_scale, dz[i], xi);
    const ForwardTrace t = forward(net, xi);
    ys[i] = t.logits;
    out.all_in_cell = out.all_in_cell && t.pattern == base;
  }

  // Centered, scaled design keeps the normal equations well conditioned.
  Vec dbar(n, 0.0), ybar(d, 0.0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    axpy(1.0, dz[i], dbar);
    axpy(1.0, ys[i], ybar);
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  dbar = scaled(dbar, inv);
  ybar = scaled(ybar, inv);
  Mat gram(n, n), cross(n, d);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Vec dc = sub(dz[i], dbar), yc = sub(ys[i], ybar);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) gram(a, b) += dc[a] * dc[b];
      for (std::size_t k = 0; k < d; ++k) cross(a, k) += dc[a] * yc[k];
    }
  }
  const SvdResult s = svd(gram);
  const double smax = s.singular_values.front(), smin = s.singular_values.back();
  if (!(smin > 1e-10 * smax)) fail(ErrorKind::RankDeficient, "regression design is singular");

  // B = V Σ⁻¹ Uᵀ cross, W_hat = Bᵀ / noise_scale.
  const std::size_t r = s.singular_values.size();
  Mat tmp(r, d);
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < n; ++a) acc += s.u_mat(a, k) * cross(a, c);
      tmp(k, c) = acc / s.singular_values[k];
    }
  out.w_hat = Mat(d, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < r; ++k) acc += s.v_mat(a, k) * tmp(k, c);
      out.w_hat(c, a) = acc / noise_scale;
    }
  Vec xbar = x;
  axpy(noise_scale, dbar, xbar);
  out.b_hat = sub(ybar, matvec(out.w_hat, xbar));

  double ss = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Vec xi = x;
    axpy(noise_scale, dz[i], xi);
    const Vec res = sub(ys[i], add(matvec(out.w_hat, xi), out.b_hat));
    ss += dot(res, res);
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(n_samples * d));
  return out;
}

Vec singular_spectrum(const Network& net, const Vec& x, MapLayer layer) {
  return svd(map_jacobian(net, x, layer)).singular_values;
}

Vec alignment_curve(const Vec& perturbation, const Network& net, const Vec& x, MapLayer layer) {
  require_dims(perturbation.size(), net.input_dim(), "perturbation");
  const double pn = norm2(perturbation);
  if (pn == 0.0) fail(ErrorKind::ZeroVector, "alignment of a zero perturbation");
  const SvdResult s = svd(map_jacobian(net, x, layer));
  Vec out(s.singular_values.size());
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = std::min(1.0, std::fabs(dot(perturbation, s.v_mat.col(r))) / pn);
  return out;
}

namespace {

void require_unit(const Vec& d) {
  if (std::fabs(norm2(d) - 1.0) > 1e-8)
    fail(ErrorKind::ConfigError, "direction must have unit l2 norm");
}

}  // namespace

std::vector<RadiusValue> linearity_deviation(const Network& net, const Vec& x, const Vec& direction,
                                             const std::vector<double>& radii, MapLayer layer) {
  require_dims(direction.size(), net.input_dim(), "direction");
  require_unit(direction);
  const ActivationPattern base = activation_pattern(net, x);
  const Vec phi0 = map_output(net, x, layer);
  const Vec jd = map_jvp(net, base, direction, layer);
  std::vector<RadiusValue> out;
  for (double r : radii) {
    Vec xr = x;
    axpy(r, direction, xr);
    const ForwardTrace t = forward(net, xr);
    Vec lin = phi0;
    axpy(r, jd, lin);
    const Vec phi = t.post_activations[map_depth(net, layer) - 1];
    out.push_back({r, norm2(sub(phi, lin)), t.pattern == base});
  }
  return out;
}

std::vector<RadiusValue> top_sv_over_distance(const Network& net, const Vec& x, const Vec& direction,
                                              const std::vector<double>& radii, MapLayer layer) {
  require_dims(direction.size(), net.input_dim(), "direction");
  require_unit(direction);
  const ActivationPattern base = activation_pattern(net, x);
  std::vector<RadiusValue> out;
  for (double r : radii) {
    Vec xr = x;
    axpy(r, direction, xr);
    out.push_back({r, top_singular_value(map_jacobian(net, xr, layer)),
                   activation_pattern(net, xr) == base});
  }
  return out;
}

double shared_activation_fraction(const Network& net, const Vec& base, const Vec& z) {
  require_dims(z.size(), base.size(), "shared_activation_fraction");
  const ActivationPattern a = activation_pattern(net, base);
  if (a.size() == 0) return 1.0;
  const ActivationPattern b = activation_pattern(net, add(base, z));
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a.bits[i] == b.bits[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double in_cell_radius(const Network& net, const Vec& x, NormOrder p) {
  const ForwardTrace t = forward(net, x);
  const Mat pj = preactivation_jacobian(net, x);
  const NormOrder ps = holder_conjugate(p);
  double r = std::numeric_limits<double>::infinity();
  std::size_t j = 0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layers()[l].has_relu) continue;
    for (double z : t.pre_activations[l]) {
      const double gn = p_norm(Vec(pj.row(j), pj.row(j) + pj.cols()), ps);
      if (gn > 0.0) r = std::min(r, std::fabs(z) / gn);
      ++j;
    }
  }
  return r;
}

double boundary_distance_along(const Network& net, const Vec& x, const Vec& direction) {
  require_dims(direction.size(), net.input_dim(), "direction");
  const ForwardTrace t = forward(net, x);
  const Vec slope = matvec(preactivation_jacobian(net, x), direction);
  double best = std::numeric_limits<double>::infinity();
  std::size_t j = 0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layers()[l].has_relu) continue;
    for (double z : t.pre_activations[l]) {
      const double s = slope[j++];
      if (z >= 0.0 && s < 0.0) best = std::min(best, z / -s);
      if (z < 0.0 && s > 0.0) best = std::min(best, -z / s);
    }
  }
  return best;
}

EquivalenceReport verify_theorem1(const Network& net, const Vec& x, NormOrder p, NormOrder q,
                                  double eps, int iters, const Vec& v0) {
  if (p.is_finite_general() || q.is_finite_general())
    fail(ErrorKind::UnsupportedNorm, "verification covers p, q in {1, 2, inf}");
  if (!(eps > 0.0)) fail(ErrorKind::ConfigError, "eps must be positive");
  require_dims(v0.size(), net.input_dim(), "v0");
  if (std::fabs(p_norm(v0, p) - 1.0) > 1e-9) fail(ErrorKind::ConfigError, "v0 must have unit p-norm");

  EquivalenceReport rep;
  rep.p = p;
  rep.q = q;
  rep.eps = eps;

  const JacobianOperator op(net, x);
  OpNormConfig one;
  one.p = p;
  one.q = q;
  one.iterations = 1;
  std::vector<Vec> power_v;
  Vec v = v0;
  for (int k = 0; k < iters; ++k) {
    const PowerIterState s = opnorm_power_limit(op, one, v);
    v = s.v;
    power_v.push_back(v);
    rep.sigma_power.push_back(s.sigma);
  }

  AttackConfig cfg;
  cfg.p = p;
  cfg.eps = eps;
  cfg.alpha = std::numeric_limits<double>::infinity();
  cfg.iterations = iters;
  cfg.loss = LogitLqLoss{q};
  Vec x0 = x;
  axpy(eps, v0, x0);
  cfg.start = x0;
  const AttackResult a = pga_attack(net, x, 0, cfg);

  const Vec clean = logits(net, x);
  rep.same_cell_throughout = activation_pattern(net, x0) == op.pattern();
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    const AttackStep& st = a.trace[k];
    rep.cosines.push_back(cosine(st.v, power_v[k]));
    rep.sigma_pga.push_back(p_norm(sub(logits(net, st.x), clean), q) / eps);
    const bool in = activation_pattern(net, st.x) == op.pattern();
    rep.in_cell.push_back(in);
    rep.same_cell_throughout = rep.same_cell_throughout && in;
  }
  rep.sigma_power.resize(a.trace.size());
  if (a.terminated_early) rep.same_cell_throughout = false;
  if (rep.same_cell_throughout && !a.trace.empty()) {
    const double lhs = p_norm(sub(logits(net, a.x_star), clean), q);
    const double rhs = eps * p_norm(op.apply(a.trace.back().v), q);
    rep.objective_identity_error = std::fabs(lhs - rhs);
  }
  return rep;
}

std::vector<AccuracyPoint> robust_accuracy_curve(const Network& net, const LabeledSet& data,
                                                 const std::vector<double>& eps_grid,
                                                 const AttackConfig& attack_template,
                                                 std::uint64_t seed, ExecPolicy policy) {
  if (eps_grid.empty()) fail(ErrorKind::ConfigError, "empty eps grid");
  if (!std::is_sorted(eps_grid.begin(), eps_grid.end()) || eps_grid.front() < 0.0)
    fail(ErrorKind::ConfigError, "eps grid must be ascending and nonnegative");
  const std::size_t n = data.size();
  if (n == 0) fail(ErrorKind::ConfigError, "empty evaluation set");

  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = derive_seed(seed, 0, i, SeedPurpose::AttackInit);
  std::vector<std::uint8_t> broken(n, 0);
  for_each_index(n, policy,
                 [&](std::size_t i) { broken[i] = predict(net, data.inputs[i]) != data.labels[i]; });

  std::vector<AccuracyPoint> out;
  for (double eps : eps_grid) {
    if (eps > 0.0) {
      AttackConfig cfg = attack_template;
      cfg.eps = eps;
      if (!(cfg.alpha && std::isinf(*cfg.alpha))) cfg.alpha.reset();
      for_each_index(n, policy, [&](std::size_t i) {
        if (broken[i]) return;
        AttackConfig c = cfg;
        c.seed = seeds[i];
        const AttackResult r = pga_attack(net, data.inputs[i], data.labels[i], c);
        if (predict(net, r.x_star) != data.labels[i]) broken[i] = 1;
      });
    }
    std::size_t correct = 0;
    for (auto b : broken) correct += !b;
    const double acc = static_cast<double>(correct) / static_cast<double>(n);
    out.push_back({eps, acc, std::sqrt(acc * (1.0 - acc) / static_cast<double>(n))});
  }
  return out;
}

MeanSe mean_se(const Vec& values) {
  MeanSe r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double nn = static_cast<double>(values.size());
  r.se = std::sqrt(ss / (nn - 1.0) / nn);
  return r;
}

double median(Vec values) {
  if (values.empty()) fail(ErrorKind::ConfigError, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace onlab
