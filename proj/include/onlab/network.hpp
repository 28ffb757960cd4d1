#pragma once

#include <cstdint>
#include <vector>

#include "onlab/linalg.hpp"

namespace onlab {

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool has_relu = true;
};

struct Layer {
  Mat weight;  // out x in
  Vec bias;
  bool has_relu = true;
};

// One bit per hidden neuron, layer-major. Bit is set when the pre-activation is >= 0.
struct ActivationPattern {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  bool operator==(const ActivationPattern& o) const { return bits == o.bits; }
  bool operator!=(const ActivationPattern& o) const { return bits != o.bits; }
};

struct ForwardTrace {
  Vec logits;
  ActivationPattern pattern;
  std::vector<Vec> pre_activations;   // one per layer
  std::vector<Vec> post_activations;  // one per layer; last equals logits
};

// Which map the Jacobian-based analyses look at.
enum class MapLayer {
  LastHidden,  // x -> output of the last ReLU layer
  Logits,
};

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  // Uniform(-s, s), s = sqrt(6/(in+out)); zero biases.
  static Network random(const std::vector<std::size_t>& widths, std::uint64_t seed);
  static Network from_specs(const std::vector<LayerSpec>& specs, std::uint64_t seed);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& mutable_layers() noexcept { return layers_; }
  std::size_t depth() const noexcept { return layers_.size(); }

  std::size_t input_dim() const { return layers_.front().weight.cols(); }
  std::size_t output_dim() const { return layers_.back().weight.rows(); }
  std::size_t neuron_count() const;

  bool operator==(const Network& o) const;

  // Rejects broken chains, a ReLU on the last layer, and non-finite parameters.
  void validate() const;

 private:
  std::vector<Layer> layers_;
};

ForwardTrace forward(const Network& net, const Vec& x);
Vec logits(const Network& net, const Vec& x);
ActivationPattern activation_pattern(const Network& net, const Vec& x);
bool same_cell(const Network& net, const Vec& x1, const Vec& x2);
std::size_t predict(const Network& net, const Vec& x);
std::size_t argmax(const Vec& v);

Mat jacobian(const Network& net, const Vec& x);
Vec jvp(const Network& net, const Vec& x, const Vec& v);
Vec vjp(const Network& net, const Vec& x, const Vec& u);

// Products with the pattern supplied rather than recomputed.
Vec jvp(const Network& net, const ActivationPattern& pattern, const Vec& v);
Vec vjp(const Network& net, const ActivationPattern& pattern, const Vec& u);

// Truncated maps: LastHidden stops after the last ReLU layer. A network with no
// hidden layer falls back to the logits.
std::size_t map_depth(const Network& net, MapLayer layer);
std::size_t map_output_dim(const Network& net, MapLayer layer);
Vec map_output(const Network& net, const Vec& x, MapLayer layer);
Mat map_jacobian(const Network& net, const Vec& x, MapLayer layer);
Vec map_jvp(const Network& net, const ActivationPattern& pattern, const Vec& v, MapLayer layer);
Vec map_vjp(const Network& net, const ActivationPattern& pattern, const Vec& u, MapLayer layer);

// Gradients of every hidden pre-activation w.r.t. the input, rows in pattern order.
Mat preactivation_jacobian(const Network& net, const Vec& x);

struct ParamGradients {
  std::vector<Mat> weight;
  std::vector<Vec> bias;

  static ParamGradients zeros_like(const Network& net);
  void add(const ParamGradients& o, double scale = 1.0);
  void scale(double s);
  double squared_norm() const;
};

// d(gᵀ f(x)) / d theta by backpropagation.
ParamGradients param_gradients(const Network& net, const Vec& x, const Vec& logit_grad);

// d(uᵀ J(x) v) / d theta with the activation pattern held fixed. Biases do not
// enter the Jacobian so their gradients are zero.
ParamGradients bilinear_jacobian_gradients(const Network& net, const ActivationPattern& pattern,
                                           const Vec& u, const Vec& v);

struct ConvGeometry {
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t stride = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

// Dense matrix T with T·vec(input) equal to the (cross-correlation) convolution of a
// single-channel input with `kernel`. A 1-D convolution uses in_h = 1 and a 1×k kernel.
Mat conv_to_toeplitz(const Mat& kernel, const ConvGeometry& g);

}  // namespace onlab
