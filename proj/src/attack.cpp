#include "onlab/attack.hpp"

#include <algorithm>
#include <cmath>

#include "onlab/error.hpp"

namespace onlab {

double AttackConfig::step_size() const {
  if (alpha) return *alpha;
  return 2.0 * eps / static_cast<double>(iterations);
}

Vec softmax(const Vec& logits, double beta) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Vec s(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    s[i] = std::exp(beta * (logits[i] - m));
    z += s[i];
  }
  for (double& x : s) x /= z;
  return s;
}

double cross_entropy(const Vec& logits, std::size_t y, double beta) {
  if (y >= logits.size()) fail(ErrorKind::DimensionMismatch, "label out of range");
  if (!(beta > 0.0)) fail(ErrorKind::ConfigError, "temperature must be positive");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(beta * (l - m));
  return std::max(0.0, (beta * (m - logits[y]) + std::log(z)) / beta);
}

Vec cross_entropy_grad(const Vec& logits, std::size_t y, double beta) {
  if (y >= logits.size()) fail(ErrorKind::DimensionMismatch, "label out of range");
  Vec g = softmax(logits, beta);
  g[y] -= 1.0;
  return g;
}

Vec logit_direction(const AdvLoss& loss, std::size_t y, std::optional<std::size_t> target,
                    const Vec& logits_now, const Vec& logits_clean) {
  require_dims(logits_clean.size(), logits_now.size(), "logit_direction");
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&loss)) {
    if (!(ce->beta > 0.0)) fail(ErrorKind::ConfigError, "temperature must be positive");
    if (target) {
      if (*target >= logits_now.size()) fail(ErrorKind::DimensionMismatch, "target out of range");
      Vec d = scaled(softmax(logits_now, ce->beta), -1.0);
      d[*target] += 1.0;
      return d;
    }
    return cross_entropy_grad(logits_now, y, ce->beta);
  }
  const auto& lq = std::get<LogitLqLoss>(loss);
  return p_norm_gradient(sub(logits_now, logits_clean), lq.q);
}

double adversarial_loss_value(const AdvLoss& loss, std::size_t y, std::optional<std::size_t> target,
                              const Vec& logits_now, const Vec& logits_clean) {
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&loss)) {
    if (target) return -cross_entropy(logits_now, *target, ce->beta);
    return cross_entropy(logits_now, y, ce->beta);
  }
  return p_norm(sub(logits_now, logits_clean), std::get<LogitLqLoss>(loss).q);
}

Vec sample_ball_uniform(const Vec& center, double eps, NormOrder p, Rng& rng) {
  if (eps == 0.0) return center;
  const std::size_t n = center.size();
  Vec d(n);
  switch (p.kind()) {
    case NormOrder::Kind::Infinity: {
      std::uniform_real_distribution<double> u(-eps, eps);
      for (double& x : d) x = u(rng);
      break;
    }
    case NormOrder::Kind::Two: {
      std::normal_distribution<double> g;
      double nn = 0.0;
      while (nn == 0.0) {
        for (double& x : d) x = g(rng);
        nn = norm2(d);
      }
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double r = eps * std::pow(u(rng), 1.0 / static_cast<double>(n));
      d = scaled(d, r / nn);
      break;
    }
    case NormOrder::Kind::One: {
      // First n coordinates of a flat Dirichlet over n+1 cells are uniform on the simplex.
      std::exponential_distribution<double> e(1.0);
      std::bernoulli_distribution coin(0.5);
      double total = 0.0;
      for (double& x : d) {
        x = e(rng);
        total += x;
      }
      total += e(rng);
      for (double& x : d) x = (coin(rng) ? eps : -eps) * x / total;
      break;
    }
    case NormOrder::Kind::Finite:
      fail(ErrorKind::UnsupportedNorm, "uniform ball sampling for p=" + p.to_string());
  }
  return add(center, d);
}

Vec sample_ball_uniform(const Vec& center, double eps, NormOrder p, std::uint64_t seed) {
  Rng rng(seed);
  return sample_ball_uniform(center, eps, p, rng);
}

AttackResult pga_attack(const Network& net, const Vec& x, std::size_t y, const AttackConfig& cfg) {
  require_dims(x.size(), net.input_dim(), "attack input");
  if (cfg.iterations < 1) fail(ErrorKind::ConfigError, "attack iterations must be >= 1");
  if (!(cfg.eps >= 0.0)) fail(ErrorKind::ConfigError, "attack radius must be nonnegative");
  if (cfg.p.is_finite_general())
    fail(ErrorKind::UnsupportedNorm, "attack norm must be 1, 2 or inf");
  if (y >= net.output_dim()) fail(ErrorKind::DimensionMismatch, "label out of range");

  const Vec clean = logits(net, x);
  const std::size_t label = cfg.use_predicted_label ? argmax(clean) : y;
  const double alpha = cfg.step_size();
  const bool jump = std::isinf(alpha);
  const bool lq = std::holds_alternative<LogitLqLoss>(cfg.loss);

  Vec xk;
  if (cfg.start) {
    require_dims(cfg.start->size(), x.size(), "attack start");
    xk = *cfg.start;
  } else if (cfg.random_init || lq) {
    xk = sample_ball_uniform(x, cfg.eps, cfg.p, derive_seed(cfg.seed, 0, 0, SeedPurpose::AttackInit));
  } else {
    xk = x;
  }

  AttackResult res;
  res.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  ForwardTrace tr = forward(net, xk);
  try {
    for (int k = 0; k < cfg.iterations; ++k) {
      AttackStep st;
      st.u = logit_direction(cfg.loss, label, cfg.target, tr.logits, clean);
      if (cfg.normalize_u) {
        const double n = norm2(st.u);
        if (n == 0.0) fail(ErrorKind::ZeroVector, "logit direction vanished");
        st.u = scaled(st.u, 1.0 / n);
      }
      st.v = optimal_perturbation(vjp(net, tr.pattern, st.u), cfg.p);
      if (jump) {
        st.x = x;
        axpy(cfg.eps, st.v, st.x);
      } else {
        Vec stepped = xk;
        axpy(alpha, st.v, stepped);
        st.x = project_ball(stepped, x, cfg.eps, cfg.p);
      }
      ForwardTrace next = forward(net, st.x);
      st.loss = adversarial_loss_value(cfg.loss, label, cfg.target, next.logits, clean);
      if (next.pattern != tr.pattern) ++res.cells_crossed;
      xk = st.x;
      tr = std::move(next);
      res.trace.push_back(std::move(st));
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroVector) throw;
    res.terminated_early = true;
  }
  res.x_star = xk;
  if (res.terminated_early) {
    res.success = false;
  } else {
    const std::size_t pred = argmax(tr.logits);
    res.success = cfg.target ? pred == *cfg.target : pred != label;
  }
  return res;
}

}  // namespace onlab
