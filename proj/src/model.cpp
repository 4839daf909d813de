#include "gtgan/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gtgan/rng.hpp"

namespace gtgan {

namespace {

std::uint64_t next_revision() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

LayerKind critic_layer_kind(std::size_t index, std::size_t conv_layers) {
  if (index < conv_layers) return LayerKind::e2e_conv;
  if (index == conv_layers) return LayerKind::e2n_conv;
  if (index == conv_layers + 1) return LayerKind::node_to_graph;
  return LayerKind::dense;
}

LayerKind translator_layer_kind(const ArchSpec& a, std::size_t index) {
  const std::size_t enc = a.encoder_channels.size() - 1;
  if (index < enc) return LayerKind::e2e_conv;
  if (index == enc) return LayerKind::e2n_conv;
  if (index == enc + 1) return LayerKind::n2e_deconv;
  return LayerKind::e2e_deconv;
}

// Number of input entries weighted into one output entry, per map pair.
double fan_factor(LayerKind kind, std::size_t n) {
  switch (kind) {
    case LayerKind::e2e_conv:
    case LayerKind::e2n_conv:
    case LayerKind::e2e_deconv: return 2.0 * static_cast<double>(n);
    case LayerKind::n2e_deconv: return 2.0;
    case LayerKind::node_to_graph: return static_cast<double>(n);
    case LayerKind::dense: return 1.0;
  }
  return 1.0;
}

LayerKind layer_kind(const ArchSpec& a, Role role, std::size_t index) {
  if (role == Role::translator) return translator_layer_kind(a, index);
  const std::size_t depth = a.disc_channels.size() - 1;
  const std::size_t conv = role == Role::discriminator ? 2 * depth : depth;
  return critic_layer_kind(index, conv);
}

// Index of the encoder output added onto decoder level t, if any.
std::optional<std::size_t> skip_source(const ArchSpec& a, std::size_t t) {
  if (a.skip == SkipMode::none) return std::nullopt;
  const std::size_t enc = a.encoder_channels.size() - 1;
  if (t >= enc) return std::nullopt;
  return enc - 1 - t;
}

void zero_diagonal(FeatureTensor& t) {
  for (std::size_t m = 0; m < t.maps(); ++m) {
    for (std::size_t i = 0; i < t.n(); ++i) t.at(m, i, i) = 0.0;
  }
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::translator: return "translator";
    case Role::discriminator: return "discriminator";
    case Role::classifier: return "classifier";
  }
  return "unknown";
}

Role parse_role(std::string_view text) {
  if (text == "translator") return Role::translator;
  if (text == "discriminator") return Role::discriminator;
  if (text == "classifier") return Role::classifier;
  throw std::invalid_argument("unknown role '" + std::string(text) + "'");
}

std::string_view to_string(SkipMode mode) { return mode == SkipMode::add ? "add" : "none"; }

SkipMode parse_skip_mode(std::string_view text) {
  if (text == "add") return SkipMode::add;
  if (text == "none") return SkipMode::none;
  throw std::invalid_argument("unknown skip mode '" + std::string(text) + "' (valid: add, none)");
}

void ArchSpec::validate() const {
  auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t c) { return c > 0; });
  };
  if (n < 2) throw std::invalid_argument("arch n must be >= 2");
  if (encoder_channels.size() < 2 || encoder_channels.front() != 1 || !positive(encoder_channels)) {
    throw std::invalid_argument("encoder channels must start at 1 and have at least one layer");
  }
  if (decoder_channels.empty() || decoder_channels.back() != 1 || !positive(decoder_channels)) {
    throw std::invalid_argument("decoder channels must end at 1");
  }
  if (disc_channels.size() < 2 || disc_channels.front() != 1 || !positive(disc_channels)) {
    throw std::invalid_argument("discriminator channels must start at 1 and have a layer");
  }
  if (node_channels == 0 || disc_node_channels == 0 || disc_graph_channels == 0 || fc_width == 0) {
    throw std::invalid_argument("layer widths must be positive");
  }
  if (output_activation == Activation::linear) {
    throw std::invalid_argument("translator output activation must be relu or sigmoid");
  }
  if (skip == SkipMode::add) {
    const std::size_t enc = encoder_channels.size() - 1;
    for (std::size_t t = 0; t < decoder_channels.size() && t < enc; ++t) {
      if (decoder_channels[t] != encoder_channels[enc - t]) {
        throw std::invalid_argument("skip connection needs decoder level " + std::to_string(t) +
                                    " to have " + std::to_string(encoder_channels[enc - t]) +
                                    " maps");
      }
    }
  }
}

ModelParams::ModelParams(ArchSpec arch, Role role, std::vector<LayerKernels> layers,
                         std::uint64_t seed)
    : arch_(std::move(arch)), role_(role), seed_(seed), layers_(std::move(layers)),
      revision_(next_revision()) {
  const auto expected = layer_shapes(arch_, role_);
  if (expected.size() != layers_.size()) {
    throw std::invalid_argument("layer count does not match the architecture");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = expected[l];
    if (a.in_maps != b.in_maps || a.out_maps != b.out_maps || a.n != b.n ||
        a.phi.size() != b.phi.size() || a.psi.size() != b.psi.size() ||
        a.bias.size() != b.bias.size()) {
      throw std::invalid_argument("layer " + std::to_string(l) + " is mis-shaped for the arch");
    }
  }
}

std::vector<LayerKernels>& ModelParams::mutable_layers() {
  revision_ = next_revision();
  return layers_;
}

std::size_t ModelParams::param_count() const {
  std::size_t total = 0;
  for (const auto& k : layers_) total += k.param_count();
  return total;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& k : layers_) {
    out.insert(out.end(), k.phi.begin(), k.phi.end());
    out.insert(out.end(), k.psi.begin(), k.psi.end());
    out.insert(out.end(), k.bias.begin(), k.bias.end());
  }
  return out;
}

void ModelParams::assign(std::span<const double> values) {
  if (values.size() != param_count()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(values.size()) +
                                " values, model needs " + std::to_string(param_count()));
  }
  std::size_t pos = 0;
  for (auto& k : layers_) {
    for (auto* v : {&k.phi, &k.psi, &k.bias}) {
      std::copy(values.begin() + static_cast<std::ptrdiff_t>(pos),
                values.begin() + static_cast<std::ptrdiff_t>(pos + v->size()), v->begin());
      pos += v->size();
    }
  }
  revision_ = next_revision();
}

ModelGrads ModelGrads::zeros_like(const ModelParams& p) {
  ModelGrads g;
  for (const auto& k : p.layers()) g.layers.push_back(KernelGrads::like(k));
  return g;
}

std::vector<double> ModelGrads::flatten() const {
  std::vector<double> out;
  for (const auto& k : layers) {
    out.insert(out.end(), k.phi.begin(), k.phi.end());
    out.insert(out.end(), k.psi.begin(), k.psi.end());
    out.insert(out.end(), k.bias.begin(), k.bias.end());
  }
  return out;
}

void ModelGrads::add(const ModelGrads& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    add_into(layers[l].phi, other.layers[l].phi);
    add_into(layers[l].psi, other.layers[l].psi);
    add_into(layers[l].bias, other.layers[l].bias);
  }
}

void ModelGrads::scale(double factor) {
  for (auto& k : layers) {
    for (auto* v : {&k.phi, &k.psi, &k.bias}) {
      for (double& x : *v) x *= factor;
    }
  }
}

double ModelGrads::max_abs() const {
  double m = 0.0;
  for (const auto& k : layers) {
    for (const auto* v : {&k.phi, &k.psi, &k.bias}) {
      for (double x : *v) m = std::max(m, std::abs(x));
    }
  }
  return m;
}

std::vector<LayerKernels> layer_shapes(const ArchSpec& a, Role role) {
  a.validate();
  const Activation hidden = a.hidden_activation;
  std::vector<LayerKernels> layers;
  if (role == Role::translator) {
    const auto& enc = a.encoder_channels;
    for (std::size_t l = 1; l < enc.size(); ++l) {
      layers.push_back(LayerKernels::zeros(enc[l - 1], enc[l], a.n, hidden));
    }
    layers.push_back(LayerKernels::zeros(enc.back(), a.node_channels, a.n, hidden));
    const auto& dec = a.decoder_channels;
    for (std::size_t t = 0; t < dec.size(); ++t) {
      const std::size_t in = t == 0 ? a.node_channels + a.noise_dim : dec[t - 1];
      const Activation act = t + 1 == dec.size() ? a.output_activation : hidden;
      layers.push_back(LayerKernels::zeros(in, dec[t], a.n, act));
    }
    return layers;
  }
  const auto& ch = a.disc_channels;
  const std::size_t channels = role == Role::discriminator ? 2 : 1;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t l = 1; l < ch.size(); ++l) {
      layers.push_back(LayerKernels::zeros(ch[l - 1], ch[l], a.n, hidden));
    }
  }
  layers.push_back(LayerKernels::zeros(channels * ch.back(), a.disc_node_channels, a.n, hidden));
  layers.push_back(
      LayerKernels::zeros(a.disc_node_channels, a.disc_graph_channels, a.n, hidden, false));
  layers.push_back(LayerKernels::dense(a.disc_graph_channels, a.fc_width, hidden));
  layers.push_back(LayerKernels::dense(a.fc_width, 1, Activation::sigmoid));
  return layers;
}

ModelParams init_params(const ArchSpec& arch, Role role, std::uint64_t seed) {
  auto layers = layer_shapes(arch, role);
  Rng rng(seed);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& k = layers[l];
    const double fan = fan_factor(layer_kind(arch, role, l), arch.n);
    const double limit =
        std::sqrt(6.0 / (fan * static_cast<double>(k.in_maps) + fan * static_cast<double>(k.out_maps)));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : k.phi) v = u(rng);
    for (double& v : k.psi) v = u(rng);
  }
  return ModelParams(arch, role, std::move(layers), seed);
}

std::size_t param_count(const ArchSpec& arch, Role role) {
  std::size_t total = 0;
  for (const auto& k : layer_shapes(arch, role)) total += k.param_count();
  return total;
}

std::string to_string(const Shape& s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols) + "x" + std::to_string(s.maps);
}

DirectedGraph TranslatorResult::graph() const {
  return DirectedGraph::from_dense(output.n(), output.data());
}

TranslatorResult translator_forward(const ModelParams& p, const DirectedGraph& input,
                                    std::span<const double> noise, bool keep_cache) {
  return translator_forward(p, FeatureTensor::from_graph(input), noise, keep_cache);
}

TranslatorResult translator_forward(const ModelParams& p, const FeatureTensor& input,
                                    std::span<const double> noise, bool keep_cache) {
  if (p.role() != Role::translator) throw std::invalid_argument("model is not a translator");
  const ArchSpec& a = p.arch();
  const auto& K = p.layers();
  if (input.n() != a.n || input.maps() != 1) {
    throw ShapeError("translator expects a single " + std::to_string(a.n) + "-node graph, got n=" +
                     std::to_string(input.n()));
  }
  if (noise.size() != a.noise_dim * a.n) {
    throw ShapeError("noise has " + std::to_string(noise.size()) + " values, expected " +
                     std::to_string(a.noise_dim * a.n));
  }
  const std::size_t enc = a.encoder_channels.size() - 1;
  const std::size_t dec = a.decoder_channels.size();

  TranslatorCache c;
  c.revision = p.revision();
  c.input = input;
  const FeatureTensor* x = &c.input;
  for (std::size_t l = 0; l < enc; ++l) {
    c.encoder_pre.push_back(e2e_conv_preactivation(*x, K[l]));
    FeatureTensor out = c.encoder_pre.back();
    apply_activation(out.data(), K[l].activation);
    c.encoder_out.push_back(std::move(out));
    x = &c.encoder_out.back();
  }
  c.node_pre = e2n_conv_preactivation(c.encoder_out.back(), K[enc]);
  c.node_out = c.node_pre;
  apply_activation(c.node_out.data(), K[enc].activation);

  c.decoder_input = NodeTensor(a.n, a.node_channels + a.noise_dim);
  std::copy(c.node_out.data().begin(), c.node_out.data().end(), c.decoder_input.data().begin());
  std::copy(noise.begin(), noise.end(),
            c.decoder_input.data().begin() + static_cast<std::ptrdiff_t>(c.node_out.data().size()));

  for (std::size_t t = 0; t < dec; ++t) {
    const LayerKernels& k = K[enc + 1 + t];
    FeatureTensor pre = t == 0 ? n2e_deconv_preactivation(c.decoder_input, k)
                               : e2e_deconv_preactivation(c.decoder_out.back(), k);
    if (const auto src = skip_source(a, t)) add_into(pre.data(), c.encoder_out[*src].data());
    FeatureTensor out = pre;
    apply_activation(out.data(), k.activation);
    if (t + 1 == dec && a.zero_diagonal) zero_diagonal(out);
    c.decoder_pre.push_back(std::move(pre));
    c.decoder_out.push_back(std::move(out));
  }

  TranslatorResult result;
  result.output = c.decoder_out.back();
  if (keep_cache) result.cache = std::move(c);
  return result;
}

ModelGrads translator_backward(const ModelParams& p, const TranslatorCache& c,
                               const FeatureTensor& grad_output) {
  if (p.role() != Role::translator) throw std::invalid_argument("model is not a translator");
  if (c.revision != p.revision() || c.decoder_out.empty()) {
    throw std::logic_error("translator cache is stale or missing; rerun the forward pass");
  }
  const ArchSpec& a = p.arch();
  const auto& K = p.layers();
  const std::size_t enc = a.encoder_channels.size() - 1;
  const std::size_t dec = a.decoder_channels.size();
  if (grad_output.n() != a.n || grad_output.maps() != 1) {
    throw ShapeError("translator output gradient must be n x n x 1");
  }

  ModelGrads grads = ModelGrads::zeros_like(p);
  std::vector<FeatureTensor> skip_grads;
  for (const auto& e : c.encoder_out) skip_grads.emplace_back(e.n(), e.maps());

  FeatureTensor g = grad_output;
  if (a.zero_diagonal) zero_diagonal(g);
  NodeTensor g_node;
  for (std::size_t step = 0; step < dec; ++step) {
    const std::size_t t = dec - 1 - step;
    const std::size_t layer = enc + 1 + t;
    activation_backward(c.decoder_pre[t].data(), g.data(), K[layer].activation);
    if (const auto src = skip_source(a, t)) add_into(skip_grads[*src].data(), g.data());
    if (t > 0) {
      auto r = e2e_deconv_backward(c.decoder_out[t - 1], K[layer], g);
      grads.layers[layer] = std::move(r.kernels);
      g = std::move(r.input);
    } else {
      auto r = n2e_deconv_backward(c.decoder_input, K[layer], g);
      grads.layers[layer] = std::move(r.kernels);
      g_node = NodeTensor(a.n, a.node_channels);
      std::copy(r.input.data().begin(),
                r.input.data().begin() + static_cast<std::ptrdiff_t>(g_node.data().size()),
                g_node.data().begin());
    }
  }

  activation_backward(c.node_pre.data(), g_node.data(), K[enc].activation);
  auto r = e2n_conv_backward(c.encoder_out.back(), K[enc], g_node);
  grads.layers[enc] = std::move(r.kernels);
  FeatureTensor g_edge = std::move(r.input);
  for (std::size_t step = 0; step < enc; ++step) {
    const std::size_t l = enc - 1 - step;
    add_into(g_edge.data(), skip_grads[l].data());
    activation_backward(c.encoder_pre[l].data(), g_edge.data(), K[l].activation);
    const FeatureTensor& in = l == 0 ? c.input : c.encoder_out[l - 1];
    auto rl = e2e_conv_backward(in, K[l], g_edge);
    grads.layers[l] = std::move(rl.kernels);
    g_edge = std::move(rl.input);
  }
  return grads;
}

std::vector<Shape> shape_trace(const TranslatorCache& c) {
  std::vector<Shape> out;
  out.push_back({c.input.n(), c.input.n(), c.input.maps()});
  for (const auto& e : c.encoder_out) out.push_back({e.n(), e.n(), e.maps()});
  out.push_back({c.node_out.n(), 1, c.node_out.maps()});
  for (const auto& d : c.decoder_out) out.push_back({d.n(), d.n(), d.maps()});
  return out;
}

namespace {

CriticResult critic_forward(const ModelParams& p, std::span<const FeatureTensor* const> channels,
                            bool keep_cache) {
  const ArchSpec& a = p.arch();
  const auto& K = p.layers();
  const std::size_t depth = a.disc_channels.size() - 1;
  for (const FeatureTensor* ch : channels) {
    if (ch->n() != a.n || ch->maps() != 1) {
      throw ShapeError("critic expects " + std::to_string(a.n) + "-node single-map graphs, got n=" +
                       std::to_string(ch->n()));
    }
  }

  CriticCache c;
  c.revision = p.revision();
  c.stack_depth = depth;
  c.channels = channels.size();
  c.layers.resize(K.size());

  const std::size_t top = a.disc_channels.back();
  FeatureTensor merged(a.n, channels.size() * top);
  for (std::size_t ch = 0; ch < channels.size(); ++ch) {
    Tensor x = *channels[ch];
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t idx = ch * depth + l;
      x = layer_forward(LayerKind::e2e_conv, x, K[idx], &c.layers[idx]);
    }
    const auto& out = std::get<FeatureTensor>(x).data();
    std::copy(out.begin(), out.end(),
              merged.data().begin() + static_cast<std::ptrdiff_t>(ch * top * a.n * a.n));
  }
  const std::size_t conv = channels.size() * depth;
  Tensor h = layer_forward(LayerKind::e2n_conv, Tensor(std::move(merged)), K[conv], &c.layers[conv]);
  h = layer_forward(LayerKind::node_to_graph, h, K[conv + 1], &c.layers[conv + 1]);
  h = layer_forward(LayerKind::dense, h, K[conv + 2], &c.layers[conv + 2]);
  h = layer_forward(LayerKind::dense, h, K[conv + 3], &c.layers[conv + 3]);

  CriticResult result;
  result.logit = std::get<std::vector<double>>(c.layers[conv + 3].preactivation)[0];
  result.probability = std::get<std::vector<double>>(h)[0];
  if (keep_cache) result.cache = std::move(c);
  return result;
}

}  // namespace

CriticResult discriminator_forward(const ModelParams& p, const FeatureTensor& target,
                                   const FeatureTensor& input, bool keep_cache) {
  if (p.role() != Role::discriminator) throw std::invalid_argument("model is not a discriminator");
  const FeatureTensor* channels[] = {&target, &input};
  return critic_forward(p, channels, keep_cache);
}

CriticResult discriminator_forward(const ModelParams& p, const DirectedGraph& target,
                                   const DirectedGraph& input, bool keep_cache) {
  return discriminator_forward(p, FeatureTensor::from_graph(target),
                               FeatureTensor::from_graph(input), keep_cache);
}

CriticResult classifier_forward(const ModelParams& p, const FeatureTensor& graph,
                                bool keep_cache) {
  if (p.role() != Role::classifier) throw std::invalid_argument("model is not a classifier");
  const FeatureTensor* channels[] = {&graph};
  return critic_forward(p, channels, keep_cache);
}

CriticResult classifier_forward(const ModelParams& p, const DirectedGraph& graph,
                                bool keep_cache) {
  return classifier_forward(p, FeatureTensor::from_graph(graph), keep_cache);
}

CriticBackward critic_backward(const ModelParams& p, const CriticCache& c, double grad_logit) {
  if (p.role() == Role::translator) throw std::invalid_argument("model is not a critic");
  if (c.revision != p.revision() || c.layers.size() != p.layers().size()) {
    throw std::logic_error("critic cache is stale or missing; rerun the forward pass");
  }
  const auto& K = p.layers();
  const std::size_t conv = c.channels * c.stack_depth;
  CriticBackward out{ModelGrads::zeros_like(p), {}};

  // The last layer is differentiated from its logit directly.
  const std::size_t last = conv + 3;
  const double g_logit[] = {grad_logit};
  auto head = dense_backward(std::get<std::vector<double>>(c.layers[last].input), K[last], g_logit);
  out.params.layers[last] = std::move(head.kernels);
  Tensor g = std::move(head.input);
  for (std::size_t idx = last; idx-- > conv;) {
    auto r = layer_backward(K[idx], c.layers[idx], g);
    out.params.layers[idx] = std::move(r.kernels);
    g = std::move(r.input);
  }

  const auto& merged = std::get<FeatureTensor>(g);
  const std::size_t n = merged.n();
  const std::size_t top = merged.maps() / c.channels;
  for (std::size_t ch = 0; ch < c.channels; ++ch) {
    FeatureTensor part(n, top);
    std::copy(merged.data().begin() + static_cast<std::ptrdiff_t>(ch * top * n * n),
              merged.data().begin() + static_cast<std::ptrdiff_t>((ch + 1) * top * n * n),
              part.data().begin());
    Tensor gc = std::move(part);
    for (std::size_t l = c.stack_depth; l-- > 0;) {
      const std::size_t idx = ch * c.stack_depth + l;
      auto r = layer_backward(K[idx], c.layers[idx], gc);
      out.params.layers[idx] = std::move(r.kernels);
      gc = std::move(r.input);
    }
    out.inputs.push_back(std::get<FeatureTensor>(std::move(gc)));
  }
  return out;
}

std::vector<Shape> shape_trace(const CriticCache& c) {
  std::vector<Shape> out;
  const auto& first = std::get<FeatureTensor>(c.layers[0].input);
  out.push_back({first.n(), first.n(), first.maps()});
  for (std::size_t l = 0; l < c.stack_depth; ++l) {
    const auto& t = std::get<FeatureTensor>(c.layers[l].preactivation);
    out.push_back({t.n(), t.n(), t.maps()});
  }
  const std::size_t conv = c.channels * c.stack_depth;
  const auto& node = std::get<NodeTensor>(c.layers[conv].preactivation);
  out.push_back({node.n(), 1, node.maps()});
  const auto& graph = std::get<std::vector<double>>(c.layers[conv + 1].preactivation);
  out.push_back({1, 1, graph.size()});
  return out;
}

}  // namespace gtgan
