#include "onlab/network.hpp"

#include <algorithm>
#include <cmath>

#include "onlab/error.hpp"
#include "onlab/random.hpp"

namespace onlab {

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

Network Network::random(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) fail(ErrorKind::DimensionMismatch, "network needs at least two widths");
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    specs.push_back({widths[i], widths[i + 1], i + 2 < widths.size()});
  return from_specs(specs, seed);
}

Network Network::from_specs(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layer> layers;
  for (const LayerSpec& s : specs) {
    if (s.in_dim == 0 || s.out_dim == 0) fail(ErrorKind::DimensionMismatch, "zero-width layer");
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer l{Mat(s.out_dim, s.in_dim), Vec(s.out_dim, 0.0), s.has_relu};
    for (double& w : l.weight.data()) w = dist(rng);
    layers.push_back(std::move(l));
  }
  return Network(std::move(layers));
}

std::size_t Network::neuron_count() const {
  std::size_t m = 0;
  for (const Layer& l : layers_)
    if (l.has_relu) m += l.weight.rows();
  return m;
}

bool Network::operator==(const Network& o) const {
  if (layers_.size() != o.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer &a = layers_[i], &b = o.layers_[i];
    if (a.has_relu != b.has_relu || !(a.weight == b.weight) || a.bias != b.bias) return false;
  }
  return true;
}

void Network::validate() const {
  if (layers_.empty()) fail(ErrorKind::DimensionMismatch, "network has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0)
      fail(ErrorKind::DimensionMismatch, "layer " + std::to_string(i) + " is empty");
    require_dims(l.bias.size(), l.weight.rows(), "layer bias");
    if (i > 0) require_dims(l.weight.cols(), layers_[i - 1].weight.rows(), "layer chain");
    const bool last = i + 1 == layers_.size();
    if (l.has_relu == last)
      fail(ErrorKind::DimensionMismatch, "every layer but the last must carry a ReLU");
    if (!all_finite(l.weight.data()) || !all_finite(l.bias))
      fail(ErrorKind::NonFiniteLoss, "non-finite parameter in layer " + std::to_string(i));
  }
}

ForwardTrace forward(const Network& net, const Vec& x) {
  require_dims(x.size(), net.input_dim(), "forward input");
  ForwardTrace t;
  t.pattern.bits.reserve(net.neuron_count());
  const Vec* a = &x;
  for (const Layer& l : net.layers()) {
    Vec z = matvec(l.weight, *a);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += l.bias[i];
    Vec h = z;
    if (l.has_relu) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        const bool on = z[i] >= 0.0;
        t.pattern.bits.push_back(on);
        if (!on) h[i] = 0.0;
      }
    }
    t.pre_activations.push_back(std::move(z));
    t.post_activations.push_back(std::move(h));
    a = &t.post_activations.back();
  }
  t.logits = t.post_activations.back();
  return t;
}

Vec logits(const Network& net, const Vec& x) { return forward(net, x).logits; }

ActivationPattern activation_pattern(const Network& net, const Vec& x) {
  return forward(net, x).pattern;
}

bool same_cell(const Network& net, const Vec& x1, const Vec& x2) {
  require_dims(x2.size(), x1.size(), "same_cell");
  return activation_pattern(net, x1) == activation_pattern(net, x2);
}

std::size_t argmax(const Vec& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t predict(const Network& net, const Vec& x) { return argmax(logits(net, x)); }

std::size_t map_depth(const Network& net, MapLayer layer) {
  if (layer == MapLayer::Logits || net.depth() < 2) return net.depth();
  return net.depth() - 1;
}

std::size_t map_output_dim(const Network& net, MapLayer layer) {
  return net.layers()[map_depth(net, layer) - 1].weight.rows();
}

namespace {

void check_pattern(const Network& net, const ActivationPattern& p) {
  require_dims(p.size(), net.neuron_count(), "activation pattern");
}

Vec jvp_to(const Network& net, const ActivationPattern& p, const Vec& v, std::size_t depth) {
  check_pattern(net, p);
  require_dims(v.size(), net.input_dim(), "jvp tangent");
  Vec t = v;
  std::size_t off = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    const Layer& L = net.layers()[l];
    t = matvec(L.weight, t);
    if (L.has_relu) {
      for (std::size_t i = 0; i < t.size(); ++i)
        if (!p.bits[off + i]) t[i] = 0.0;
      off += t.size();
    }
  }
  return t;
}

// Offset of each layer's first bit in the pattern.
std::vector<std::size_t> pattern_offsets(const Network& net) {
  std::vector<std::size_t> offs(net.depth(), 0);
  std::size_t off = 0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    offs[l] = off;
    if (net.layers()[l].has_relu) off += net.layers()[l].weight.rows();
  }
  return offs;
}

Vec vjp_from(const Network& net, const ActivationPattern& p, const Vec& u, std::size_t depth) {
  check_pattern(net, p);
  require_dims(u.size(), net.layers()[depth - 1].weight.rows(), "vjp cotangent");
  const auto offs = pattern_offsets(net);
  Vec d = u;
  for (std::size_t l = depth; l-- > 0;) {
    const Layer& L = net.layers()[l];
    if (L.has_relu)
      for (std::size_t i = 0; i < d.size(); ++i)
        if (!p.bits[offs[l] + i]) d[i] = 0.0;
    d = matvec_t(L.weight, d);
  }
  return d;
}

Mat jacobian_to(const Network& net, const ActivationPattern& p, std::size_t depth) {
  const auto offs = pattern_offsets(net);
  Mat m;
  for (std::size_t l = 0; l < depth; ++l) {
    const Layer& L = net.layers()[l];
    m = l == 0 ? L.weight : matmul(L.weight, m);
    if (L.has_relu)
      for (std::size_t i = 0; i < m.rows(); ++i)
        if (!p.bits[offs[l] + i]) std::fill(m.row(i), m.row(i) + m.cols(), 0.0);
  }
  return m;
}

}  // namespace

Vec jvp(const Network& net, const ActivationPattern& pattern, const Vec& v) {
  return jvp_to(net, pattern, v, net.depth());
}

Vec vjp(const Network& net, const ActivationPattern& pattern, const Vec& u) {
  return vjp_from(net, pattern, u, net.depth());
}

Vec jvp(const Network& net, const Vec& x, const Vec& v) {
  return jvp(net, activation_pattern(net, x), v);
}

Vec vjp(const Network& net, const Vec& x, const Vec& u) {
  return vjp(net, activation_pattern(net, x), u);
}

Mat jacobian(const Network& net, const Vec& x) {
  return jacobian_to(net, activation_pattern(net, x), net.depth());
}

Vec map_output(const Network& net, const Vec& x, MapLayer layer) {
  return forward(net, x).post_activations[map_depth(net, layer) - 1];
}

Mat map_jacobian(const Network& net, const Vec& x, MapLayer layer) {
  return jacobian_to(net, activation_pattern(net, x), map_depth(net, layer));
}

Vec map_jvp(const Network& net, const ActivationPattern& pattern, const Vec& v, MapLayer layer) {
  return jvp_to(net, pattern, v, map_depth(net, layer));
}

Vec map_vjp(const Network& net, const ActivationPattern& pattern, const Vec& u, MapLayer layer) {
  return vjp_from(net, pattern, u, map_depth(net, layer));
}

Mat preactivation_jacobian(const Network& net, const Vec& x) {
  const ActivationPattern p = activation_pattern(net, x);
  const auto offs = pattern_offsets(net);
  Mat out(net.neuron_count(), net.input_dim());
  Mat m;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Layer& L = net.layers()[l];
    if (!L.has_relu) break;
    m = l == 0 ? L.weight : matmul(L.weight, m);
    for (std::size_t i = 0; i < m.rows(); ++i)
      std::copy(m.row(i), m.row(i) + m.cols(), out.row(offs[l] + i));
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (!p.bits[offs[l] + i]) std::fill(m.row(i), m.row(i) + m.cols(), 0.0);
  }
  return out;
}

ParamGradients ParamGradients::zeros_like(const Network& net) {
  ParamGradients g;
  for (const Layer& l : net.layers()) {
    g.weight.emplace_back(l.weight.rows(), l.weight.cols());
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

void ParamGradients::add(const ParamGradients& o, double s) {
  require_dims(o.weight.size(), weight.size(), "gradient layer count");
  for (std::size_t l = 0; l < weight.size(); ++l) {
    auto& w = weight[l].data();
    const auto& ow = o.weight[l].data();
    require_dims(ow.size(), w.size(), "gradient weight");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += s * ow[i];
    axpy(s, o.bias[l], bias[l]);
  }
}

void ParamGradients::scale(double s) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    for (double& x : weight[l].data()) x *= s;
    for (double& x : bias[l]) x *= s;
  }
}

double ParamGradients::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    for (double x : weight[l].data()) s += x * x;
    for (double x : bias[l]) s += x * x;
  }
  return s;
}

namespace {

void outer_into(const Vec& d, const Vec& a, Mat& out) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    double* r = out.row(i);
    for (std::size_t j = 0; j < a.size(); ++j) r[j] = d[i] * a[j];
  }
}

}  // namespace

ParamGradients param_gradients(const Network& net, const Vec& x, const Vec& logit_grad) {
  require_dims(logit_grad.size(), net.output_dim(), "logit gradient");
  const ForwardTrace t = forward(net, x);
  const auto offs = pattern_offsets(net);
  ParamGradients g = ParamGradients::zeros_like(net);
  Vec d = logit_grad;
  for (std::size_t l = net.depth(); l-- > 0;) {
    const Layer& L = net.layers()[l];
    if (L.has_relu)
      for (std::size_t i = 0; i < d.size(); ++i)
        if (!t.pattern.bits[offs[l] + i]) d[i] = 0.0;
    const Vec& a = l == 0 ? x : t.post_activations[l - 1];
    outer_into(d, a, g.weight[l]);
    g.bias[l] = d;
    if (l > 0) d = matvec_t(L.weight, d);
  }
  return g;
}

ParamGradients bilinear_jacobian_gradients(const Network& net, const ActivationPattern& pattern,
                                           const Vec& u, const Vec& v) {
  check_pattern(net, pattern);
  require_dims(u.size(), net.output_dim(), "bilinear u");
  require_dims(v.size(), net.input_dim(), "bilinear v");
  const auto offs = pattern_offsets(net);
  std::vector<Vec> tangents{v};
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    Vec t = matvec(net.layers()[l].weight, tangents.back());
    for (std::size_t i = 0; i < t.size(); ++i)
      if (!pattern.bits[offs[l] + i]) t[i] = 0.0;
    tangents.push_back(std::move(t));
  }
  ParamGradients g = ParamGradients::zeros_like(net);
  Vec d = u;
  for (std::size_t l = net.depth(); l-- > 0;) {
    const Layer& L = net.layers()[l];
    if (L.has_relu)
      for (std::size_t i = 0; i < d.size(); ++i)
        if (!pattern.bits[offs[l] + i]) d[i] = 0.0;
    outer_into(d, tangents[l], g.weight[l]);
    if (l > 0) d = matvec_t(L.weight, d);
  }
  return g;
}

Mat conv_to_toeplitz(const Mat& kernel, const ConvGeometry& g) {
  const std::size_t kh = kernel.rows(), kw = kernel.cols();
  if (kh == 0 || kw == 0 || g.in_h == 0 || g.in_w == 0 || g.stride == 0)
    fail(ErrorKind::GeometryError, "empty kernel, input or zero stride");
  const std::size_t ph = g.in_h + 2 * g.pad_h, pw = g.in_w + 2 * g.pad_w;
  if (kh > ph || kw > pw) fail(ErrorKind::GeometryError, "kernel larger than padded input");
  const std::size_t oh = (ph - kh) / g.stride + 1, ow = (pw - kw) / g.stride + 1;
  Mat t(oh * ow, g.in_h * g.in_w);
  for (std::size_t oi = 0; oi < oh; ++oi)
    for (std::size_t oj = 0; oj < ow; ++oj)
      for (std::size_t a = 0; a < kh; ++a)
        for (std::size_t b = 0; b < kw; ++b) {
          const std::size_t pi = oi * g.stride + a, pj = oj * g.stride + b;
          if (pi < g.pad_h || pj < g.pad_w) continue;
          const std::size_t ii = pi - g.pad_h, jj = pj - g.pad_w;
          if (ii >= g.in_h || jj >= g.in_w) continue;
          t(oi * ow + oj, ii * g.in_w + jj) += kernel(a, b);
        }
  return t;
}

}  // namespace onlab
