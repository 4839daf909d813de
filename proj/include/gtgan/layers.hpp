#pragma once

// Directed graph convolution layers and their transposes.
//
// For a layer with M_in input maps and M_out output maps over n nodes, the
// kernels phi (incoming) and psi (outgoing) hold one length-n vector per
// (input map m, output map o), stored input-map-major: index (m*M_out+o)*n+k.
//
//   e2e conv    z_o(i,j) = sum_m  X_m[i,:].psi_mo + phi_mo.X_m[:,j]        + b_o
//   e2n conv    z_o(i)   = sum_m  X_m[i,:].psi_mo + phi_mo.X_m[:,i]        + b_o
//   n2e deconv  z_o(i,j) = sum_m  phi_mo[i] x_m[j] + x_m[i] psi_mo[j]      + b_o
//   e2e deconv  z_o(i,j) = sum_m  phi_mo[i] colsum_j(X_m) + rowsum_i(X_m) psi_mo[j] + b_o
//   node->graph z_o      = sum_m  phi_mo.x_m                               + b_o
//
// Edge (i,j) of an e2e conv mixes the out-edges of its source i with the
// in-edges of its target j. The activation is applied once, after the sum
// over input maps and the bias. With zero bias and linear activation each
// deconvolution is the adjoint of the matching convolution under
// transposed() kernels.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "gtgan/tensor.hpp"

namespace gtgan {

enum class Activation { linear, relu, sigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

enum class LayerKind { e2e_conv, e2n_conv, n2e_deconv, e2e_deconv, node_to_graph, dense };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

struct LayerKernels {
  std::size_t in_maps = 0;
  std::size_t out_maps = 0;
  std::size_t n = 0;
  std::vector<double> phi;
  std::vector<double> psi;  // empty for node_to_graph and dense layers
  std::vector<double> bias;
  Activation activation = Activation::linear;

  static LayerKernels zeros(std::size_t in_maps, std::size_t out_maps, std::size_t n,
                            Activation act, bool with_psi = true);
  /// Fully connected in -> out layer: node_to_graph over length-1 maps.
  static LayerKernels dense(std::size_t in, std::size_t out, Activation act);

  bool has_psi() const { return !psi.empty(); }
  std::size_t index(std::size_t m, std::size_t o, std::size_t k) const {
    return (m * out_maps + o) * n + k;
  }
  double& phi_at(std::size_t m, std::size_t o, std::size_t k) { return phi[index(m, o, k)]; }
  double phi_at(std::size_t m, std::size_t o, std::size_t k) const { return phi[index(m, o, k)]; }
  double& psi_at(std::size_t m, std::size_t o, std::size_t k) { return psi[index(m, o, k)]; }
  double psi_at(std::size_t m, std::size_t o, std::size_t k) const { return psi[index(m, o, k)]; }

  std::size_t param_count() const { return phi.size() + psi.size() + bias.size(); }

  /// Kernels of the adjoint map: input and output map roles swapped, zero
  /// bias, linear activation.
  LayerKernels transposed() const;

  bool operator==(const LayerKernels&) const = default;
};

/// Gradients with the same shapes as the kernels they belong to.
struct KernelGrads {
  std::vector<double> phi;
  std::vector<double> psi;
  std::vector<double> bias;

  static KernelGrads like(const LayerKernels& k);
  bool all_zero() const;
};

template <class Input>
struct LayerBackward {
  Input input;
  KernelGrads kernels;
};

void apply_activation(std::span<double> values, Activation act);
/// grad <- grad * act'(pre), elementwise.
void activation_backward(std::span<const double> pre, std::span<double> grad, Activation act);

// Pre-activation (linear part plus bias) of each layer.
FeatureTensor e2e_conv_preactivation(const FeatureTensor& x, const LayerKernels& k);
NodeTensor e2n_conv_preactivation(const FeatureTensor& x, const LayerKernels& k);
FeatureTensor n2e_deconv_preactivation(const NodeTensor& x, const LayerKernels& k);
FeatureTensor e2e_deconv_preactivation(const FeatureTensor& x, const LayerKernels& k);
std::vector<double> node_to_graph_preactivation(const NodeTensor& x, const LayerKernels& k);

FeatureTensor e2e_conv_forward(const FeatureTensor& x, const LayerKernels& k);
NodeTensor e2n_conv_forward(const FeatureTensor& x, const LayerKernels& k);
FeatureTensor n2e_deconv_forward(const NodeTensor& x, const LayerKernels& k);
FeatureTensor e2e_deconv_forward(const FeatureTensor& x, const LayerKernels& k);
std::vector<double> node_to_graph_forward(const NodeTensor& x, const LayerKernels& k);
std::vector<double> dense_forward(std::span<const double> x, const LayerKernels& k);

// Backward passes take the gradient with respect to the pre-activation.
LayerBackward<FeatureTensor> e2e_conv_backward(const FeatureTensor& x, const LayerKernels& k,
                                               const FeatureTensor& grad_pre);
LayerBackward<FeatureTensor> e2n_conv_backward(const FeatureTensor& x, const LayerKernels& k,
                                               const NodeTensor& grad_pre);
LayerBackward<NodeTensor> n2e_deconv_backward(const NodeTensor& x, const LayerKernels& k,
                                              const FeatureTensor& grad_pre);
LayerBackward<FeatureTensor> e2e_deconv_backward(const FeatureTensor& x, const LayerKernels& k,
                                                 const FeatureTensor& grad_pre);
LayerBackward<NodeTensor> node_to_graph_backward(const NodeTensor& x, const LayerKernels& k,
                                                 std::span<const double> grad_pre);
LayerBackward<std::vector<double>> dense_backward(std::span<const double> x,
                                                  const LayerKernels& k,
                                                  std::span<const double> grad_pre);

// Kind-generic interface. Dense layers take and return plain vectors.
using Tensor = std::variant<FeatureTensor, NodeTensor, std::vector<double>>;

struct LayerCache {
  LayerKind kind = LayerKind::e2e_conv;
  Tensor input;
  Tensor preactivation;
};

struct LayerGradients {
  Tensor input;
  KernelGrads kernels;
};

/// Forward pass through one layer; fills `cache` when given.
Tensor layer_forward(LayerKind kind, const Tensor& x, const LayerKernels& k,
                     LayerCache* cache = nullptr);

/// Exact gradients of a scalar loss given dLoss/dOutput, chaining through
/// the activation recorded in the cache.
LayerGradients layer_backward(const LayerKernels& k, const LayerCache& cache,
                              const Tensor& grad_out);

struct GradCheckOptions {
  Activation activation = Activation::linear;
  double epsilon = 1e-5;
  /// Redraw (deterministically) until every pre-activation is far enough
  /// from the ReLU kink that no finite-difference probe crosses it.
  bool avoid_kinks = true;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  /// Smallest |pre-activation| seen; relevant for relu.
  double min_abs_preactivation = 0.0;
};

/// Random input and kernels from `seed`; compares layer_backward against
/// central differences of the loss <R, output> for a random R over every
/// kernel, bias and input coordinate. Error per coordinate is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckResult grad_check(LayerKind kind, std::size_t n, std::size_t in_maps,
                           std::size_t out_maps, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace gtgan
