#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtgan/graph.hpp"
#include "gtgan/layers.hpp"
#include "gtgan/tensor.hpp"

namespace gtgan {

enum class Role { translator, discriminator, classifier };
enum class SkipMode { add, none };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);
std::string_view to_string(SkipMode mode);
SkipMode parse_skip_mode(std::string_view text);

/// Layer widths for the translator, the conditional discriminator and the
/// single-channel transfer classifier. Defaults give
///   translator     NxNx1 -> NxNx5 -> NxNx10 -> Nx1x10 -> NxNx10 -> NxNx5 -> NxNx1
///   discriminator  NxNx1 -> NxNx5 -> NxNx10 -> Nx1x10 -> 1x1x10 (per channel)
struct ArchSpec {
  std::size_t n = 0;
  std::vector<std::size_t> encoder_channels{1, 5, 10};
  std::size_t node_channels = 10;
  std::vector<std::size_t> decoder_channels{10, 5, 1};
  std::vector<std::size_t> disc_channels{1, 5, 10};
  std::size_t disc_node_channels = 10;
  std::size_t disc_graph_channels = 10;
  std::size_t fc_width = 64;
  std::size_t noise_dim = 2;
  SkipMode skip = SkipMode::add;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::relu;
  /// Force translator outputs on the diagonal to zero (no self-loops).
  bool zero_diagonal = true;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;
  bool operator==(const ArchSpec&) const = default;
};

/// All kernels of one network, in checkpoint order.
///
///   translator     encoder e2e convs, e2n conv, n2e deconv, e2e deconvs
///   discriminator  target-channel e2e convs, input-channel e2e convs, e2n conv,
///                  node->graph, dense (P), dense (1, sigmoid)
///   classifier     e2e convs, e2n conv, node->graph, dense (P), dense (1, sigmoid)
///
/// Every mutation through mutable_layers() or assign() gets a fresh
/// revision so stale forward caches are detectable.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(ArchSpec arch, Role role, std::vector<LayerKernels> layers, std::uint64_t seed);

  const ArchSpec& arch() const { return arch_; }
  Role role() const { return role_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<LayerKernels>& layers() const { return layers_; }
  std::vector<LayerKernels>& mutable_layers();
  std::uint64_t revision() const { return revision_; }

  std::size_t param_count() const;
  /// Per layer: phi, psi, bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> values);

  bool operator==(const ModelParams& other) const {
    return arch_ == other.arch_ && role_ == other.role_ && seed_ == other.seed_ &&
           layers_ == other.layers_;
  }

 private:
  ArchSpec arch_;
  Role role_ = Role::translator;
  std::uint64_t seed_ = 0;
  std::vector<LayerKernels> layers_;
  std::uint64_t revision_ = 0;
};

/// Gradient of every layer of a network, aligned with ModelParams::layers().
struct ModelGrads {
  std::vector<KernelGrads> layers;

  static ModelGrads zeros_like(const ModelParams& p);
  std::vector<double> flatten() const;
  void add(const ModelGrads& other);
  void scale(double factor);
  double max_abs() const;
};

/// Zero-filled layers with the exact shapes the role needs.
std::vector<LayerKernels> layer_shapes(const ArchSpec& arch, Role role);

/// Uniform(-s, s) kernels with s = sqrt(6 / (fan_in + fan_out)), zero
/// biases. fan_in counts the input entries weighted into one output entry.
ModelParams init_params(const ArchSpec& arch, Role role, std::uint64_t seed);

std::size_t param_count(const ArchSpec& arch, Role role);

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t maps = 0;
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

struct TranslatorCache {
  std::uint64_t revision = 0;
  FeatureTensor input;
  std::vector<FeatureTensor> encoder_pre;
  std::vector<FeatureTensor> encoder_out;
  NodeTensor node_pre;
  NodeTensor node_out;
  NodeTensor decoder_input;  // node_out followed by the noise maps
  std::vector<FeatureTensor> decoder_pre;  // includes skip additions
  std::vector<FeatureTensor> decoder_out;
};

struct TranslatorResult {
  FeatureTensor output;  // one map, n x n, nonnegative
  std::optional<TranslatorCache> cache;

  DirectedGraph graph() const;
};

/// `noise` holds noise_dim * n values, appended as noise_dim node maps to
/// the bottleneck representation.
TranslatorResult translator_forward(const ModelParams& p, const FeatureTensor& input,
                                    std::span<const double> noise, bool keep_cache);
TranslatorResult translator_forward(const ModelParams& p, const DirectedGraph& input,
                                    std::span<const double> noise, bool keep_cache);

/// Parameter gradients given dLoss/dOutput. Skip additions send gradient
/// into both branches; the noise receives none.
ModelGrads translator_backward(const ModelParams& p, const TranslatorCache& cache,
                               const FeatureTensor& grad_output);

/// Encoder, bottleneck and decoder outputs in order, starting with the input.
std::vector<Shape> shape_trace(const TranslatorCache& cache);

struct CriticCache {
  std::uint64_t revision = 0;
  std::vector<LayerCache> layers;  // aligned with ModelParams::layers()
  std::size_t stack_depth = 0;
  std::size_t channels = 0;
};

struct CriticResult {
  double probability = 0.5;
  double logit = 0.0;
  std::optional<CriticCache> cache;
};

/// Conditional discriminator D(target | input).
CriticResult discriminator_forward(const ModelParams& p, const FeatureTensor& target,
                                   const FeatureTensor& input, bool keep_cache);
CriticResult discriminator_forward(const ModelParams& p, const DirectedGraph& target,
                                   const DirectedGraph& input, bool keep_cache);

/// Single-channel graph classifier.
CriticResult classifier_forward(const ModelParams& p, const FeatureTensor& graph,
                                bool keep_cache);
CriticResult classifier_forward(const ModelParams& p, const DirectedGraph& graph,
                                bool keep_cache);

struct CriticBackward {
  ModelGrads params;
  /// dLoss/d(channel input), one per channel: target then input for the
  /// discriminator, the graph for the classifier.
  std::vector<FeatureTensor> inputs;
};

/// Backward from dLoss/dlogit through a discriminator or classifier.
CriticBackward critic_backward(const ModelParams& p, const CriticCache& cache, double grad_logit);

/// Shapes along the target channel: input, e2e convs, node map, graph embedding.
std::vector<Shape> shape_trace(const CriticCache& cache);

}  // namespace gtgan
