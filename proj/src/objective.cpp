#include "onlab/objective.hpp"

#include <cmath>

#include "onlab/error.hpp"
#include "onlab/opnorm.hpp"
#include "onlab/random.hpp"

namespace onlab {

namespace {

struct Term {
  double value = 0.0;
  ParamGradients grads;
};

struct Seeds {
  std::uint64_t attack;
  std::uint64_t power;
};

void check_weight(double w, const char* what) {
  if (!(w >= 0.0) || !std::isfinite(w))
    fail(ErrorKind::ConfigError, std::string(what) + " weight must be finite and >= 0");
}

Term standard_term(const Network& net, const Vec& x, std::size_t y) {
  const Vec z = logits(net, x);
  return {cross_entropy(z, y), param_gradients(net, x, cross_entropy_grad(z, y))};
}

Term adversarial_term(const Network& net, const Vec& x, std::size_t y,
                      const AdversarialObjective& obj, const Seeds& seeds) {
  Term t = standard_term(net, x, y);
  if (obj.weight == 0.0) return t;
  AttackConfig cfg = obj.attack;
  cfg.seed = seeds.attack;
  const AttackResult r = pga_attack(net, x, y, cfg);
  const Vec clean = logits(net, x);
  const Vec adv = logits(net, r.x_star);
  const std::size_t label = cfg.use_predicted_label ? argmax(clean) : y;
  t.value += obj.weight * adversarial_loss_value(cfg.loss, label, cfg.target, adv, clean);
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&cfg.loss)) {
    Vec g = cfg.target ? scaled(cross_entropy_grad(adv, *cfg.target, ce->beta), -1.0)
                       : cross_entropy_grad(adv, label, ce->beta);
    t.grads.add(param_gradients(net, r.x_star, g), obj.weight);
  } else {
    const Vec diff = sub(adv, clean);
    bool zero = true;
    for (double d : diff) zero = zero && d == 0.0;
    if (!zero) {
      const Vec g = p_norm_gradient(diff, std::get<LogitLqLoss>(cfg.loss).q);
      t.grads.add(param_gradients(net, r.x_star, g), obj.weight);
      t.grads.add(param_gradients(net, x, g), -obj.weight);
    }
  }
  return t;
}

Term snr_term(const Network& net, const Vec& x, std::size_t y, const DataDepSnrObjective& obj,
              const Seeds& seeds) {
  Term t = standard_term(net, x, y);
  if (obj.weight == 0.0) return t;
  OpNormConfig cfg;
  cfg.iterations = obj.power_iters;
  cfg.seed = seeds.power;
  const JacobianOperator op(net, x);
  const PowerIterState s = dd_spectral_power(op, cfg);
  if (obj.variant == SnrVariant::SigmaSquared) {
    t.value += 0.5 * obj.weight * s.sigma * s.sigma;
    t.grads.add(bilinear_jacobian_gradients(net, op.pattern(), s.u, s.v), obj.weight * s.sigma);
    return t;
  }
  Vec xs = x;
  axpy(obj.eps, s.v, xs);
  const Vec r = sub(logits(net, xs), logits(net, x));
  t.value += 0.5 * obj.weight * dot(r, r);
  t.grads.add(param_gradients(net, xs, r), obj.weight);
  t.grads.add(param_gradients(net, x, r), -obj.weight);
  return t;
}

Term onr_term(const Network& net, const Vec& x, std::size_t y, const DataDepOnrObjective& obj,
              const Seeds& seeds) {
  Term t = standard_term(net, x, y);
  if (obj.weight == 0.0) return t;
  OpNormConfig cfg;
  cfg.p = obj.p;
  cfg.q = obj.q;
  cfg.iterations = obj.iters;
  cfg.use_q_power = obj.use_q_power;
  const JacobianOperator op(net, x);
  Rng rng(seeds.power);
  const PowerIterState s = opnorm_power_limit(op, cfg, random_unit_vector(op.cols(), obj.p, rng));
  // With v frozen, d||Jv||_q = ∇||·||_q(Jv)ᵀ dJ v.
  const Vec u = p_norm_gradient(op.apply(s.v), obj.q);
  double coef = obj.weight;
  if (obj.use_q_power) {
    t.value += obj.weight * std::pow(s.sigma, obj.q.value()) / obj.q.value();
    coef *= std::pow(s.sigma, obj.q.value() - 1.0);
  } else {
    t.value += obj.weight * s.sigma;
  }
  t.grads.add(bilinear_jacobian_gradients(net, op.pattern(), u, s.v), coef);
  return t;
}

Term interpolated_term(const Network& net, const Vec& x, std::size_t y,
                       const InterpolatedObjective& obj, const Seeds& seeds) {
  // Zero-weight components are skipped so the endpoints reproduce the pure objectives bit for bit.
  if (obj.t == 0.0) return adversarial_term(net, x, y, obj.at, seeds);
  if (obj.t == 1.0) return snr_term(net, x, y, obj.snr, seeds);
  Term a = adversarial_term(net, x, y, obj.at, seeds);
  const Term b = snr_term(net, x, y, obj.snr, seeds);
  a.value = (1.0 - obj.t) * a.value + obj.t * b.value;
  a.grads.scale(1.0 - obj.t);
  a.grads.add(b.grads, obj.t);
  return a;
}

Term example_term(const Network& net, const Vec& x, std::size_t y, const Objective& obj,
                  const Seeds& seeds) {
  return std::visit(
      [&](const auto& o) -> Term {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, AdversarialObjective>) {
          return adversarial_term(net, x, y, o, seeds);
        } else if constexpr (std::is_same_v<T, DataDepSnrObjective>) {
          return snr_term(net, x, y, o, seeds);
        } else if constexpr (std::is_same_v<T, DataDepOnrObjective>) {
          return onr_term(net, x, y, o, seeds);
        } else if constexpr (std::is_same_v<T, InterpolatedObjective>) {
          return interpolated_term(net, x, y, o, seeds);
        } else {
          return standard_term(net, x, y);
        }
      },
      obj);
}

bool skippable(ErrorKind k) {
  return k == ErrorKind::ZeroVector || k == ErrorKind::ZeroJacobianProduct ||
         k == ErrorKind::ConvergenceFailure;
}

void add_global_snr(const Network& net, const GlobalSnrObjective& obj, GlobalSnrState& state,
                    const ObjectiveContext& ctx, ObjectiveResult& res) {
  if (obj.weight == 0.0) return;
  if (!state.initialized()) state.initialize(net, ctx.seed);
  require_dims(state.v.size(), net.depth(), "global power state");
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Mat& w = net.layers()[l].weight;
    PowerIterState s{state.u[l], state.v[l], state.sigma[l], 0, false};
    for (int k = 0; k < obj.power_iters; ++k) {
      try {
        s = global_snr_power_step(w, s);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroVector) throw;
        Rng rng(derive_seed(ctx.seed, ctx.step, l, SeedPurpose::Restart));
        s.v = random_unit_vector(w.cols(), NormOrder::two(), rng);
        s = global_snr_power_step(w, s);
      }
    }
    state.u[l] = s.u;
    state.v[l] = s.v;
    state.sigma[l] = s.sigma;
    res.value += 0.5 * obj.weight * s.sigma * s.sigma;
    Mat& g = res.grads.weight[l];
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j)
        g(i, j) += obj.weight * s.sigma * s.u[i] * s.v[j];
  }
}

}  // namespace

void GlobalSnrState::initialize(const Network& net, std::uint64_t seed) {
  u.clear();
  v.clear();
  sigma.clear();
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Mat& w = net.layers()[l].weight;
    Rng rng(derive_seed(seed, 0, l, SeedPurpose::PowerInit));
    v.push_back(random_unit_vector(w.cols(), NormOrder::two(), rng));
    u.emplace_back(w.rows(), 0.0);
    sigma.push_back(0.0);
  }
}

void validate_objective(const Objective& obj) {
  std::visit(
      [](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, AdversarialObjective>) {
          check_weight(o.weight, "adversarial");
        } else if constexpr (std::is_same_v<T, GlobalSnrObjective>) {
          check_weight(o.weight, "global SNR");
          if (o.power_iters < 1) fail(ErrorKind::ConfigError, "power_iters must be >= 1");
        } else if constexpr (std::is_same_v<T, DataDepSnrObjective>) {
          check_weight(o.weight, "data-dependent SNR");
          if (o.power_iters < 1) fail(ErrorKind::ConfigError, "power_iters must be >= 1");
        } else if constexpr (std::is_same_v<T, DataDepOnrObjective>) {
          check_weight(o.weight, "data-dependent ONR");
          if (o.iters < 1) fail(ErrorKind::ConfigError, "iters must be >= 1");
        } else if constexpr (std::is_same_v<T, InterpolatedObjective>) {
          if (!(o.t >= 0.0 && o.t <= 1.0)) fail(ErrorKind::ConfigError, "t must lie in [0, 1]");
          check_weight(o.at.weight, "adversarial");
          check_weight(o.snr.weight, "data-dependent SNR");
        }
      },
      obj);
}

std::string objective_name(const Objective& obj) {
  static const char* names[] = {"standard", "adversarial", "global_snr",
                                "dd_snr",   "dd_onr",      "interpolated"};
  return names[obj.index()];
}

ObjectiveResult objective_value_and_grads(const Network& net, const Batch& batch,
                                          const Objective& obj, GlobalSnrState& state,
                                          const ObjectiveContext& ctx) {
  if (batch.size() == 0) fail(ErrorKind::DimensionMismatch, "empty batch");
  require_dims(batch.labels.size(), batch.size(), "batch labels");
  require_dims(batch.ids.size(), batch.size(), "batch ids");
  validate_objective(obj);

  std::vector<Term> terms(batch.size());
  std::vector<std::uint8_t> ok(batch.size(), 1);
  for_each_index(batch.size(), ctx.policy, [&](std::size_t i) {
    const std::uint64_t id = batch.ids[i];
    const Seeds seeds{derive_seed(ctx.seed, ctx.step, id, SeedPurpose::AttackInit),
                      derive_seed(ctx.seed, ctx.step, id, SeedPurpose::PowerInit)};
    try {
      terms[i] = example_term(net, *batch.inputs[i], batch.labels[i], obj, seeds);
    } catch (const Error& e) {
      if (!skippable(e.kind())) throw;
      ok[i] = 0;
    }
  });

  ObjectiveResult res;
  res.grads = ParamGradients::zeros_like(net);
  std::size_t used = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!ok[i]) {
      ++res.skipped;
      continue;
    }
    res.value += terms[i].value;
    res.grads.add(terms[i].grads);
    ++used;
  }
  if (used > 0) {
    res.value /= static_cast<double>(used);
    res.grads.scale(1.0 / static_cast<double>(used));
  }
  if (const auto* g = std::get_if<GlobalSnrObjective>(&obj)) add_global_snr(net, *g, state, ctx, res);
  return res;
}

}  // namespace onlab
