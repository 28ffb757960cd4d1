#include "onlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "onlab/error.hpp"
#include "onlab/random.hpp"

namespace onlab {

namespace {

// Seeds for the epoch-0 evaluation pass; disjoint from every training step.
constexpr std::uint64_t kEvalStep = std::numeric_limits<std::uint64_t>::max();

bool grads_finite(const ParamGradients& g) {
  for (std::size_t l = 0; l < g.weight.size(); ++l)
    if (!all_finite(g.weight[l].data()) || !all_finite(g.bias[l])) return false;
  return true;
}

Batch make_batch(const LabeledSet& data, const std::vector<std::size_t>& idx, std::size_t lo,
                 std::size_t hi) {
  Batch b;
  for (std::size_t k = lo; k < hi; ++k) {
    b.inputs.push_back(&data.inputs[idx[k]]);
    b.labels.push_back(data.labels[idx[k]]);
    b.ids.push_back(idx[k]);
  }
  return b;
}

EpochMetrics measure(const Network& net, int epoch, double objective, const LabeledSet& eval,
                     const std::vector<Vec>& probe, ExecPolicy policy) {
  EpochMetrics m;
  m.epoch = epoch;
  m.objective = objective;
  m.clean_acc = batch_accuracy(net, eval.inputs, eval.labels, policy);
  if (!probe.empty()) {
    const Vec s = batch_top_sigma(net, probe, MapLayer::Logits, policy);
    m.probe_sigma_mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  }
  return m;
}

void apply_update(Network& net, ParamGradients& vel, const ParamGradients& g, double lr, double mu) {
  for (std::size_t l = 0; l < net.depth(); ++l) {
    Layer& L = net.mutable_layers()[l];
    auto& vw = vel.weight[l].data();
    const auto& gw = g.weight[l].data();
    auto& w = L.weight.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      vw[i] = mu * vw[i] + gw[i];
      w[i] -= lr * vw[i];
    }
    for (std::size_t i = 0; i < L.bias.size(); ++i) {
      vel.bias[l][i] = mu * vel.bias[l][i] + g.bias[l][i];
      L.bias[i] -= lr * vel.bias[l][i];
    }
  }
}

}  // namespace

TrainResult train(Network net, const LabeledSet& data, const LabeledSet& eval,
                  const std::vector<Vec>& probe, const TrainConfig& cfg) {
  net.validate();
  validate_objective(cfg.objective);
  if (data.size() == 0) fail(ErrorKind::DimensionMismatch, "empty training set");
  require_dims(data.labels.size(), data.inputs.size(), "training labels");
  for (const Vec& x : data.inputs) require_dims(x.size(), net.input_dim(), "training input");
  for (std::size_t y : data.labels)
    if (y >= net.output_dim()) fail(ErrorKind::DimensionMismatch, "training label out of range");
  if (cfg.epochs < 0 || cfg.batch_size == 0) fail(ErrorKind::ConfigError, "bad epochs or batch size");
  if (!(cfg.learning_rate >= 0.0)) fail(ErrorKind::ConfigError, "learning rate must be >= 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    fail(ErrorKind::ConfigError, "momentum must lie in [0, 1)");

  TrainResult res;
  GlobalSnrState state;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  {
    GlobalSnrState scratch;
    const ObjectiveResult r0 = objective_value_and_grads(
        net, make_batch(data, order, 0, order.size()), cfg.objective, scratch,
        {cfg.seed, kEvalStep, cfg.policy});
    res.skipped_examples += r0.skipped;
    res.metrics.push_back(measure(net, 0, r0.value, eval, probe, cfg.policy));
  }

  ParamGradients vel = ParamGradients::zeros_like(net);
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0, SeedPurpose::Shuffle));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const ObjectiveResult r = objective_value_and_grads(
          net, make_batch(data, order, lo, hi), cfg.objective, state, {cfg.seed, step, cfg.policy});
      if (!std::isfinite(r.value) || !grads_finite(r.grads))
        fail(ErrorKind::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) +
                                           ", batch " + std::to_string(batches));
      apply_update(net, vel, r.grads, cfg.learning_rate, cfg.momentum);
      res.skipped_examples += r.skipped;
      total += r.value;
      ++batches;
      ++step;
    }
    res.metrics.push_back(
        measure(net, epoch, total / static_cast<double>(batches), eval, probe, cfg.policy));
  }
  res.net = std::move(net);
  return res;
}

GradCheckResult check_objective_gradient(const Network& net, const Batch& batch,
                                         const Objective& obj, const ObjectiveContext& ctx,
                                         const GlobalSnrState& state, double h, double floor) {
  GlobalSnrState s0 = state;
  const ObjectiveResult base = objective_value_and_grads(net, batch, obj, s0, ctx);
  auto value_at = [&](const Network& n) {
    GlobalSnrState s = state;
    return objective_value_and_grads(n, batch, obj, s, ctx).value;
  };
  GradCheckResult out;
  double diff2 = 0.0, fd2 = 0.0;
  auto check = [&](double g, double fd) {
    diff2 += (g - fd) * (g - fd);
    fd2 += fd * fd;
    const double scale = std::max({std::fabs(g), std::fabs(fd), floor});
    out.max_elementwise = std::max(out.max_elementwise, std::fabs(g - fd) / scale);
    ++out.checked;
  };
  Network work = net;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto& w = work.mutable_layers()[l].weight.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + h;
      const double fp = value_at(work);
      w[i] = orig - h;
      const double fm = value_at(work);
      w[i] = orig;
      check(base.grads.weight[l].data()[i], (fp - fm) / (2.0 * h));
    }
    auto& b = work.mutable_layers()[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double orig = b[i];
      b[i] = orig + h;
      const double fp = value_at(work);
      b[i] = orig - h;
      const double fm = value_at(work);
      b[i] = orig;
      check(base.grads.bias[l][i], (fp - fm) / (2.0 * h));
    }
  }
  out.rel_error = fd2 > 0.0 ? std::sqrt(diff2 / fd2) : std::sqrt(diff2);
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) fail(ErrorKind::ConfigError, "bad log grid");
  std::vector<double> g;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    g.push_back(lo * std::pow(hi / lo, t));
  }
  return g;
}

std::size_t select_matched_lambda(const std::vector<SweepPoint>& points, double reference_acc,
                                  double tolerance) {
  std::size_t best = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::fabs(points[i].val_acc - reference_acc) > tolerance + 1e-12) continue;
    if (best == points.size() || points[i].lambda > points[best].lambda) best = i;
  }
  return best;
}

}  // namespace onlab
