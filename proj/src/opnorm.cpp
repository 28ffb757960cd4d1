#include "onlab/opnorm.hpp"

#include <algorithm>
#include <cmath>

#include "onlab/error.hpp"
#include "onlab/svd.hpp"

namespace onlab {

JacobianOperator::JacobianOperator(const Network& net, const Vec& x, MapLayer layer)
    : net_(net), pattern_(activation_pattern(net, x)), layer_(layer) {}

std::size_t JacobianOperator::rows() const { return map_output_dim(net_, layer_); }

Vec JacobianOperator::apply(const Vec& v) const { return map_jvp(net_, pattern_, v, layer_); }

Vec JacobianOperator::apply_t(const Vec& u) const { return map_vjp(net_, pattern_, u, layer_); }

Vec random_unit_vector(std::size_t n, NormOrder p, Rng& rng) {
  Vec v(n);
  for (;;) {
    if (p.is_two()) {
      std::normal_distribution<double> g;
      for (double& x : v) x = g(rng);
    } else {
      std::exponential_distribution<double> e(1.0);
      std::bernoulli_distribution coin(0.5);
      for (double& x : v) x = coin(rng) ? e(rng) : -e(rng);
    }
    const double n2 = p_norm(v, p);
    if (n2 > 0.0) return scaled(v, 1.0 / n2);
  }
}

PowerIterState global_snr_power_step(const Mat& weight, const PowerIterState& state) {
  require_dims(state.v.size(), weight.cols(), "power state v");
  PowerIterState s = state;
  Vec ut = matvec(weight, state.v);
  const double nu = norm2(ut);
  if (nu == 0.0) fail(ErrorKind::ZeroVector, "W v vanished; restart with a fresh random v");
  s.u = scaled(ut, 1.0 / nu);
  Vec vt = matvec_t(weight, s.u);
  const double nv = norm2(vt);
  if (nv == 0.0) fail(ErrorKind::ZeroVector, "Wᵀu vanished; restart with a fresh random v");
  s.v = scaled(vt, 1.0 / nv);
  const double prev = s.sigma;
  s.sigma = dot(s.u, matvec(weight, s.v));
  s.iteration = state.iteration + 1;
  s.converged = std::fabs(s.sigma - prev) <= 1e-9 * s.sigma;
  return s;
}

namespace {

Vec start_vector(const LinearOperator& op, const OpNormConfig& cfg, const std::optional<Vec>& v0,
                 NormOrder p) {
  if (v0) {
    require_dims(v0->size(), op.cols(), "initial v");
    return *v0;
  }
  Rng rng(derive_seed(cfg.seed, 0, 0, SeedPurpose::PowerInit));
  return random_unit_vector(op.cols(), p, rng);
}

Vec nonzero(Vec v, const char* what) {
  for (double x : v)
    if (x != 0.0) return v;
  fail(ErrorKind::ZeroJacobianProduct, what);
}

Vec dual_u(const Vec& ut, NormOrder q, bool q_power) {
  if (!q_power) return p_norm_gradient(ut, q);
  if (q.is_inf()) fail(ErrorKind::UnsupportedNorm, "q-th power normalization needs finite q");
  Vec u(ut.size());
  const double e = q.value() - 1.0;
  for (std::size_t i = 0; i < ut.size(); ++i)
    u[i] = std::copysign(std::pow(std::fabs(ut[i]), e), ut[i]) * (ut[i] != 0.0);
  return u;
}

void mark_convergence(PowerIterState& s, double prev, double tol) {
  s.converged = std::fabs(s.sigma - prev) <= tol * std::max(s.sigma, 1e-300);
}

}  // namespace

PowerIterState dd_spectral_power(const LinearOperator& op, const OpNormConfig& cfg,
                                 std::optional<Vec> v0) {
  if (!cfg.p.is_two() || !cfg.q.is_two())
    fail(ErrorKind::UnsupportedNorm, "data-dependent spectral power method needs p = q = 2");
  if (cfg.iterations < 1) fail(ErrorKind::ConfigError, "iterations must be >= 1");
  PowerIterState s;
  s.v = start_vector(op, cfg, v0, NormOrder::two());
  double prev = 0.0;
  for (int k = 0; k < cfg.iterations; ++k) {
    const Vec ut = nonzero(op.apply(s.v), "J v vanished");
    s.u = scaled(ut, 1.0 / norm2(ut));
    const Vec vt = nonzero(op.apply_t(s.u), "Jᵀu vanished");
    const double nv = norm2(vt);
    s.v = scaled(vt, 1.0 / nv);
    prev = s.sigma;
    s.sigma = nv;  // equals uᵀ J v for the updated v
    s.iteration = k + 1;
  }
  mark_convergence(s, prev, cfg.tolerance);
  return s;
}

PowerIterState dd_spectral_power(const Network& net, const Vec& x, const OpNormConfig& cfg,
                                 std::optional<Vec> v0, MapLayer layer) {
  return dd_spectral_power(JacobianOperator(net, x, layer), cfg, std::move(v0));
}

PowerIterState opnorm_power_limit(const LinearOperator& op, const OpNormConfig& cfg, const Vec& v0) {
  if (cfg.p.is_finite_general() || cfg.q.is_finite_general())
    fail(ErrorKind::UnsupportedNorm, "power-method limit supports p, q in {1, 2, inf}");
  if (cfg.iterations < 1) fail(ErrorKind::ConfigError, "iterations must be >= 1");
  require_dims(v0.size(), op.cols(), "initial v");
  PowerIterState s;
  s.v = v0;
  Vec jv = op.apply(s.v);
  double prev = 0.0;
  for (int k = 0; k < cfg.iterations; ++k) {
    s.u = dual_u(nonzero(jv, "J v vanished"), cfg.q, cfg.use_q_power);
    const Vec vt = nonzero(op.apply_t(s.u), "Jᵀu vanished");
    s.v = optimal_perturbation(vt, cfg.p);
    jv = op.apply(s.v);
    prev = s.sigma;
    s.sigma = p_norm(jv, cfg.q);
    s.iteration = k + 1;
  }
  mark_convergence(s, prev, cfg.tolerance);
  return s;
}

PowerIterState opnorm_power_limit(const Network& net, const Vec& x, const OpNormConfig& cfg,
                                  const Vec& v0) {
  return opnorm_power_limit(JacobianOperator(net, x), cfg, v0);
}

PowerIterState opnorm_pga_iteration(const LinearOperator& op, const OpNormConfig& cfg, const Vec& v0) {
  if (std::isinf(cfg.alpha)) return opnorm_power_limit(op, cfg, v0);
  if (!cfg.p.is_two())
    fail(ErrorKind::UnsupportedNorm, "finite-step operator norm iteration needs p = 2");
  if (!(cfg.alpha > 0.0)) fail(ErrorKind::ConfigError, "alpha must be positive");
  if (cfg.iterations < 1) fail(ErrorKind::ConfigError, "iterations must be >= 1");
  require_dims(v0.size(), op.cols(), "initial v");
  PowerIterState s;
  s.v = v0;
  Vec jv = op.apply(s.v);
  double prev = 0.0;
  for (int k = 0; k < cfg.iterations; ++k) {
    s.u = dual_u(nonzero(jv, "J v vanished"), cfg.q, cfg.use_q_power);
    const Vec vt = op.apply_t(s.u);
    Vec step = s.v;
    axpy(cfg.alpha, vt, step);
    s.v = project_sphere(step, cfg.p);
    jv = op.apply(s.v);
    prev = s.sigma;
    s.sigma = p_norm(jv, cfg.q);
    s.iteration = k + 1;
  }
  mark_convergence(s, prev, cfg.tolerance);
  return s;
}

PowerIterState opnorm_pga_iteration(const Network& net, const Vec& x, const OpNormConfig& cfg,
                                    const Vec& v0) {
  return opnorm_pga_iteration(JacobianOperator(net, x), cfg, v0);
}

PowerIterState opnorm_power_limit_restarts(const LinearOperator& op, const OpNormConfig& cfg) {
  if (cfg.restarts < 1) fail(ErrorKind::ConfigError, "restarts must be >= 1");
  std::optional<PowerIterState> best;
  std::optional<Error> last_error;
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 0, SeedPurpose::Restart));
    const Vec v0 = random_unit_vector(op.cols(), cfg.p, rng);
    try {
      PowerIterState s = opnorm_power_limit(op, cfg, v0);
      if (!best || s.sigma > best->sigma) best = std::move(s);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroJacobianProduct) throw;
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return *best;
}

bool opnorm_tractable(NormOrder p, NormOrder q) {
  if (p.is_one()) return q.is_one() || q.is_two() || q.is_inf();
  if (p.is_two()) return q.is_two() || q.is_inf();
  if (p.is_inf()) return q.is_inf();
  return false;
}

double closed_form_opnorm(const Mat& m, NormOrder p, NormOrder q) {
  if (p.is_finite_general() || q.is_finite_general())
    fail(ErrorKind::UnsupportedNorm, "closed forms exist only for p, q in {1, 2, inf}");
  if (!opnorm_tractable(p, q))
    fail(ErrorKind::NpHardCombination,
         "(" + p.to_string() + "," + q.to_string() + ") operator norm is NP-hard");
  if (p.is_two() && q.is_two()) return top_singular_value(m);
  double best = 0.0;
  if (p.is_one()) {
    for (std::size_t j = 0; j < m.cols(); ++j) best = std::max(best, p_norm(m.col(j), q));
    return best;
  }
  // (2,inf) and (inf,inf): largest row norm in the dual of p.
  const NormOrder ps = holder_conjugate(p);
  for (std::size_t i = 0; i < m.rows(); ++i)
    best = std::max(best, p_norm(Vec(m.row(i), m.row(i) + m.cols()), ps));
  return best;
}

bool top_singular_degenerate(const Mat& m, double rel) {
  const Vec s = svd(m).singular_values;
  if (s.size() < 2) return false;
  return s[0] - s[1] < rel * s[0];
}

}  // namespace onlab
