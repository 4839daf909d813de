#include "gtgan/layers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <type_traits>

#include "gtgan/rng.hpp"

namespace gtgan {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_kernels(const LayerKernels& k, bool needs_psi) {
  const std::size_t len = k.in_maps * k.out_maps * k.n;
  if (k.phi.size() != len || k.bias.size() != k.out_maps ||
      (needs_psi && k.psi.size() != len)) {
    throw ShapeError("layer kernels are not shaped " + std::to_string(k.in_maps) + "x" +
                     std::to_string(k.out_maps) + "x" + std::to_string(k.n));
  }
}

void check_input(std::size_t maps, std::size_t n, const LayerKernels& k, bool needs_psi) {
  check_kernels(k, needs_psi);
  if (maps != k.in_maps || n != k.n) {
    throw ShapeError("input has " + std::to_string(maps) + " maps over n=" + std::to_string(n) +
                     ", kernels expect " + std::to_string(k.in_maps) + " maps over n=" +
                     std::to_string(k.n));
  }
}

// Row terms R_o(i) = sum_m X_m[i,:].psi_mo and column terms
// C_o(j) = sum_m phi_mo.X_m[:,j], each M_out x n.
void row_col_terms(const FeatureTensor& x, const LayerKernels& k, std::vector<double>& rows,
                   std::vector<double>& cols) {
  const std::size_t n = k.n;
  rows.assign(k.out_maps * n, 0.0);
  cols.assign(k.out_maps * n, 0.0);
  for (std::size_t m = 0; m < k.in_maps; ++m) {
    const auto xm = x.map(m);
    for (std::size_t o = 0; o < k.out_maps; ++o) {
      const double* psi = &k.psi[k.index(m, o, 0)];
      const double* phi = &k.phi[k.index(m, o, 0)];
      double* r = &rows[o * n];
      double* c = &cols[o * n];
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = &xm[i * n];
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += row[t] * psi[t];
        r[i] += s;
        const double p = phi[i];
        for (std::size_t j = 0; j < n; ++j) c[j] += p * row[j];
      }
    }
  }
}

// Adjoint of row_col_terms: given dL/dR and dL/dC, accumulate kernel grads and
// dL/dX.
void row_col_backward(const FeatureTensor& x, const LayerKernels& k,
                      const std::vector<double>& grad_rows, const std::vector<double>& grad_cols,
                      FeatureTensor& grad_x, KernelGrads& grads) {
  const std::size_t n = k.n;
  for (std::size_t m = 0; m < k.in_maps; ++m) {
    const auto xm = x.map(m);
    auto gx = grad_x.map(m);
    for (std::size_t o = 0; o < k.out_maps; ++o) {
      const double* psi = &k.psi[k.index(m, o, 0)];
      const double* phi = &k.phi[k.index(m, o, 0)];
      double* gpsi = &grads.psi[k.index(m, o, 0)];
      double* gphi = &grads.phi[k.index(m, o, 0)];
      const double* r = &grad_rows[o * n];
      const double* c = &grad_cols[o * n];
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = &xm[i * n];
        double* grow = &gx[i * n];
        const double ri = r[i];
        const double p = phi[i];
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          gpsi[t] += ri * row[t];
          s += c[t] * row[t];
          grow[t] += ri * psi[t] + p * c[t];
        }
        gphi[i] += s;
      }
    }
  }
}

// z_o(i,j) += sum_m phi_mo[i] u_m[j] + v_m[i] psi_mo[j] for node-level
// vectors u, v (M_in x n each).
void broadcast_terms(const std::vector<double>& u, const std::vector<double>& v,
                     const LayerKernels& k, FeatureTensor& z) {
  const std::size_t n = k.n;
  for (std::size_t o = 0; o < k.out_maps; ++o) {
    auto zo = z.map(o);
    for (std::size_t m = 0; m < k.in_maps; ++m) {
      const double* phi = &k.phi[k.index(m, o, 0)];
      const double* psi = &k.psi[k.index(m, o, 0)];
      const double* um = &u[m * n];
      const double* vm = &v[m * n];
      for (std::size_t i = 0; i < n; ++i) {
        double* zrow = &zo[i * n];
        const double p = phi[i];
        const double vi = vm[i];
        for (std::size_t j = 0; j < n; ++j) zrow[j] += p * um[j] + vi * psi[j];
      }
    }
  }
}

// Adjoint of broadcast_terms: returns dL/du and dL/dv, accumulating kernel
// grads.
void broadcast_backward(const std::vector<double>& u, const std::vector<double>& v,
                        const LayerKernels& k, const FeatureTensor& grad_z,
                        std::vector<double>& grad_u, std::vector<double>& grad_v,
                        KernelGrads& grads) {
  const std::size_t n = k.n;
  grad_u.assign(k.in_maps * n, 0.0);
  grad_v.assign(k.in_maps * n, 0.0);
  for (std::size_t o = 0; o < k.out_maps; ++o) {
    const auto go = grad_z.map(o);
    for (std::size_t m = 0; m < k.in_maps; ++m) {
      const double* phi = &k.phi[k.index(m, o, 0)];
      const double* psi = &k.psi[k.index(m, o, 0)];
      double* gphi = &grads.phi[k.index(m, o, 0)];
      double* gpsi = &grads.psi[k.index(m, o, 0)];
      const double* um = &u[m * n];
      const double* vm = &v[m * n];
      double* gu = &grad_u[m * n];
      double* gv = &grad_v[m * n];
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = &go[i * n];
        const double p = phi[i];
        const double vi = vm[i];
        double dot_u = 0.0;
        double dot_psi = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double g = grow[j];
          dot_u += g * um[j];
          dot_psi += g * psi[j];
          gu[j] += p * g;
          gpsi[j] += vi * g;
        }
        gphi[i] += dot_u;
        gv[i] += dot_psi;
      }
    }
  }
}

void add_bias(FeatureTensor& z, const std::vector<double>& bias) {
  for (std::size_t o = 0; o < z.maps(); ++o) {
    for (double& v : z.map(o)) v += bias[o];
  }
}

void bias_grad_from(const FeatureTensor& g, KernelGrads& grads) {
  for (std::size_t o = 0; o < g.maps(); ++o) {
    double s = 0.0;
    for (double v : g.map(o)) s += v;
    grads.bias[o] += s;
  }
}

// rows[m*n+i] = sum_t X_m(i,t), cols[m*n+j] = sum_t X_m(t,j)
void row_col_sums(const FeatureTensor& x, std::vector<double>& rows, std::vector<double>& cols) {
  const std::size_t n = x.n();
  rows.assign(x.maps() * n, 0.0);
  cols.assign(x.maps() * n, 0.0);
  for (std::size_t m = 0; m < x.maps(); ++m) {
    const auto xm = x.map(m);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += xm[i * n + j];
        cols[m * n + j] += xm[i * n + j];
      }
      rows[m * n + i] = s;
    }
  }
}

template <class T>
T activated(T z, Activation act) {
  apply_activation(z.data(), act);
  return z;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation parse_activation(std::string_view text) {
  if (text == "linear") return Activation::linear;
  if (text == "relu") return Activation::relu;
  if (text == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + std::string(text) +
                              "' (valid: linear, relu, sigmoid)");
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::e2e_conv: return "e2e_conv";
    case LayerKind::e2n_conv: return "e2n_conv";
    case LayerKind::n2e_deconv: return "n2e_deconv";
    case LayerKind::e2e_deconv: return "e2e_deconv";
    case LayerKind::node_to_graph: return "node_to_graph";
    case LayerKind::dense: return "dense";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (auto kind : {LayerKind::e2e_conv, LayerKind::e2n_conv, LayerKind::n2e_deconv,
                    LayerKind::e2e_deconv, LayerKind::node_to_graph, LayerKind::dense}) {
    if (text == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown layer kind '" + std::string(text) + "'");
}

LayerKernels LayerKernels::zeros(std::size_t in_maps, std::size_t out_maps, std::size_t n,
                                 Activation act, bool with_psi) {
  LayerKernels k;
  k.in_maps = in_maps;
  k.out_maps = out_maps;
  k.n = n;
  k.phi.assign(in_maps * out_maps * n, 0.0);
  if (with_psi) k.psi.assign(in_maps * out_maps * n, 0.0);
  k.bias.assign(out_maps, 0.0);
  k.activation = act;
  return k;
}

LayerKernels LayerKernels::dense(std::size_t in, std::size_t out, Activation act) {
  return zeros(in, out, 1, act, false);
}

LayerKernels LayerKernels::transposed() const {
  LayerKernels t = zeros(out_maps, in_maps, n, Activation::linear, has_psi());
  for (std::size_t m = 0; m < in_maps; ++m) {
    for (std::size_t o = 0; o < out_maps; ++o) {
      for (std::size_t k = 0; k < n; ++k) {
        t.phi_at(o, m, k) = phi_at(m, o, k);
        if (has_psi()) t.psi_at(o, m, k) = psi_at(m, o, k);
      }
    }
  }
  return t;
}

KernelGrads KernelGrads::like(const LayerKernels& k) {
  KernelGrads g;
  g.phi.assign(k.phi.size(), 0.0);
  g.psi.assign(k.psi.size(), 0.0);
  g.bias.assign(k.bias.size(), 0.0);
  return g;
}

bool KernelGrads::all_zero() const {
  auto zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  };
  return zero(phi) && zero(psi) && zero(bias);
}

void apply_activation(std::span<double> values, Activation act) {
  switch (act) {
    case Activation::linear: return;
    case Activation::relu:
      for (double& v : values) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::sigmoid:
      for (double& v : values) v = sigmoid(v);
      return;
  }
}

void activation_backward(std::span<const double> pre, std::span<double> grad, Activation act) {
  if (pre.size() != grad.size()) throw ShapeError("activation gradient shape mismatch");
  switch (act) {
    case Activation::linear: return;
    case Activation::relu:
      for (std::size_t k = 0; k < grad.size(); ++k) {
        if (!(pre[k] > 0.0)) grad[k] = 0.0;
      }
      return;
    case Activation::sigmoid:
      for (std::size_t k = 0; k < grad.size(); ++k) {
        const double s = sigmoid(pre[k]);
        grad[k] *= s * (1.0 - s);
      }
      return;
  }
}

FeatureTensor e2e_conv_preactivation(const FeatureTensor& x, const LayerKernels& k) {
  check_input(x.maps(), x.n(), k, true);
  const std::size_t n = k.n;
  std::vector<double> rows, cols;
  row_col_terms(x, k, rows, cols);
  FeatureTensor z(n, k.out_maps);
  for (std::size_t o = 0; o < k.out_maps; ++o) {
    auto zo = z.map(o);
    for (std::size_t i = 0; i < n; ++i) {
      const double base = rows[o * n + i] + k.bias[o];
      for (std::size_t j = 0; j < n; ++j) zo[i * n + j] = base + cols[o * n + j];
    }
  }
  return z;
}

NodeTensor e2n_conv_preactivation(const FeatureTensor& x, const LayerKernels& k) {
  check_input(x.maps(), x.n(), k, true);
  const std::size_t n = k.n;
  std::vector<double> rows, cols;
  row_col_terms(x, k, rows, cols);
  NodeTensor z(n, k.out_maps);
  for (std::size_t o = 0; o < k.out_maps; ++o) {
    for (std::size_t i = 0; i < n; ++i) z.at(o, i) = rows[o * n + i] + cols[o * n + i] + k.bias[o];
  }
  return z;
}

FeatureTensor n2e_deconv_preactivation(const NodeTensor& x, const LayerKernels& k) {
  check_input(x.maps(), x.n(), k, true);
  FeatureTensor z(k.n, k.out_maps);
  broadcast_terms(x.data(), x.data(), k, z);
  add_bias(z, k.bias);
  return z;
}

FeatureTensor e2e_deconv_preactivation(const FeatureTensor& x, const LayerKernels& k) {
  check_input(x.maps(), x.n(), k, true);
  std::vector<double> rows, cols;
  row_col_sums(x, rows, cols);
  FeatureTensor z(k.n, k.out_maps);
  broadcast_terms(cols, rows, k, z);
  add_bias(z, k.bias);
  return z;
}

std::vector<double> node_to_graph_preactivation(const NodeTensor& x, const LayerKernels& k) {
  check_input(x.maps(), x.n(), k, false);
  std::vector<double> z(k.bias);
  for (std::size_t m = 0; m < k.in_maps; ++m) {
    const auto xm = x.map(m);
    for (std::size_t o = 0; o < k.out_maps; ++o) {
      const double* phi = &k.phi[k.index(m, o, 0)];
      double s = 0.0;
      for (std::size_t t = 0; t < k.n; ++t) s += phi[t] * xm[t];
      z[o] += s;
    }
  }
  return z;
}

FeatureTensor e2e_conv_forward(const FeatureTensor& x, const LayerKernels& k) {
  return activated(e2e_conv_preactivation(x, k), k.activation);
}

NodeTensor e2n_conv_forward(const FeatureTensor& x, const LayerKernels& k) {
  return activated(e2n_conv_preactivation(x, k), k.activation);
}

FeatureTensor n2e_deconv_forward(const NodeTensor& x, const LayerKernels& k) {
  return activated(n2e_deconv_preactivation(x, k), k.activation);
}

FeatureTensor e2e_deconv_forward(const FeatureTensor& x, const LayerKernels& k) {
  return activated(e2e_deconv_preactivation(x, k), k.activation);
}

std::vector<double> node_to_graph_forward(const NodeTensor& x, const LayerKernels& k) {
  auto z = node_to_graph_preactivation(x, k);
  apply_activation(z, k.activation);
  return z;
}

namespace {

NodeTensor as_node_tensor(std::span<const double> x) {
  NodeTensor t(1, x.size());
  std::copy(x.begin(), x.end(), t.data().begin());
  return t;
}

}  // namespace

std::vector<double> dense_forward(std::span<const double> x, const LayerKernels& k) {
  if (k.n != 1) throw ShapeError("dense layer kernels must have n == 1");
  return node_to_graph_forward(as_node_tensor(x), k);
}

LayerBackward<FeatureTensor> e2e_conv_backward(const FeatureTensor& x, const LayerKernels& k,
                                               const FeatureTensor& grad_pre) {
  check_input(x.maps(), x.n(), k, true);
  if (grad_pre.maps() != k.out_maps || grad_pre.n() != k.n) {
    throw ShapeError("e2e_conv gradient shape mismatch");
  }
  const std::size_t n = k.n;
  LayerBackward<FeatureTensor> out{FeatureTensor(n, k.in_maps), KernelGrads::like(k)};
  std::vector<double> grad_rows(k.out_maps * n, 0.0), grad_cols(k.out_maps * n, 0.0);
  for (std::size_t o = 0; o < k.out_maps; ++o) {
    const auto go = grad_pre.map(o);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        grad_rows[o * n + i] += go[i * n + j];
        grad_cols[o * n + j] += go[i * n + j];
      }
    }
  }
  bias_grad_from(grad_pre, out.kernels);
  row_col_backward(x, k, grad_rows, grad_cols, out.input, out.kernels);
  return out;
}

LayerBackward<FeatureTensor> e2n_conv_backward(const FeatureTensor& x, const LayerKernels& k,
                                               const NodeTensor& grad_pre) {
  check_input(x.maps(), x.n(), k, true);
  if (grad_pre.maps() != k.out_maps || grad_pre.n() != k.n) {
    throw ShapeError("e2n_conv gradient shape mismatch");
  }
  LayerBackward<FeatureTensor> out{FeatureTensor(k.n, k.in_maps), KernelGrads::like(k)};
  for (std::size_t o = 0; o < k.out_maps; ++o) {
    for (double v : grad_pre.map(o)) out.kernels.bias[o] += v;
  }
  row_col_backward(x, k, grad_pre.data(), grad_pre.data(), out.input, out.kernels);
  return out;
}

LayerBackward<NodeTensor> n2e_deconv_backward(const NodeTensor& x, const LayerKernels& k,
                                              const FeatureTensor& grad_pre) {
  check_input(x.maps(), x.n(), k, true);
  if (grad_pre.maps() != k.out_maps || grad_pre.n() != k.n) {
    throw ShapeError("n2e_deconv gradient shape mismatch");
  }
  LayerBackward<NodeTensor> out{NodeTensor(k.n, k.in_maps), KernelGrads::like(k)};
  bias_grad_from(grad_pre, out.kernels);
  std::vector<double> gu, gv;
  broadcast_backward(x.data(), x.data(), k, grad_pre, gu, gv, out.kernels);
  for (std::size_t t = 0; t < gu.size(); ++t) out.input.data()[t] = gu[t] + gv[t];
  return out;
}

LayerBackward<FeatureTensor> e2e_deconv_backward(const FeatureTensor& x, const LayerKernels& k,
                                                 const FeatureTensor& grad_pre) {
  check_input(x.maps(), x.n(), k, true);
  if (grad_pre.maps() != k.out_maps || grad_pre.n() != k.n) {
    throw ShapeError("e2e_deconv gradient shape mismatch");
  }
  const std::size_t n = k.n;
  LayerBackward<FeatureTensor> out{FeatureTensor(n, k.in_maps), KernelGrads::like(k)};
  bias_grad_from(grad_pre, out.kernels);
  std::vector<double> rows, cols;
  row_col_sums(x, rows, cols);
  std::vector<double> grad_cols, grad_rows;
  broadcast_backward(cols, rows, k, grad_pre, grad_cols, grad_rows, out.kernels);
  for (std::size_t m = 0; m < k.in_maps; ++m) {
    auto gx = out.input.map(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        gx[i * n + j] = grad_rows[m * n + i] + grad_cols[m * n + j];
      }
    }
  }
  return out;
}

LayerBackward<NodeTensor> node_to_graph_backward(const NodeTensor& x, const LayerKernels& k,
                                                 std::span<const double> grad_pre) {
  check_input(x.maps(), x.n(), k, false);
  if (grad_pre.size() != k.out_maps) throw ShapeError("node_to_graph gradient shape mismatch");
  LayerBackward<NodeTensor> out{NodeTensor(k.n, k.in_maps), KernelGrads::like(k)};
  for (std::size_t o = 0; o < k.out_maps; ++o) out.kernels.bias[o] = grad_pre[o];
  for (std::size_t m = 0; m < k.in_maps; ++m) {
    const auto xm = x.map(m);
    auto gx = out.input.map(m);
    for (std::size_t o = 0; o < k.out_maps; ++o) {
      const double g = grad_pre[o];
      const double* phi = &k.phi[k.index(m, o, 0)];
      double* gphi = &out.kernels.phi[k.index(m, o, 0)];
      for (std::size_t t = 0; t < k.n; ++t) {
        gphi[t] += g * xm[t];
        gx[t] += g * phi[t];
      }
    }
  }
  return out;
}

LayerBackward<std::vector<double>> dense_backward(std::span<const double> x,
                                                  const LayerKernels& k,
                                                  std::span<const double> grad_pre) {
  if (k.n != 1) throw ShapeError("dense layer kernels must have n == 1");
  auto inner_grads = node_to_graph_backward(as_node_tensor(x), k, grad_pre);
  return {std::move(inner_grads.input.data()), std::move(inner_grads.kernels)};
}

Tensor layer_forward(LayerKind kind, const Tensor& x, const LayerKernels& k, LayerCache* cache) {
  Tensor pre;
  switch (kind) {
    case LayerKind::e2e_conv: pre = e2e_conv_preactivation(std::get<FeatureTensor>(x), k); break;
    case LayerKind::e2n_conv: pre = e2n_conv_preactivation(std::get<FeatureTensor>(x), k); break;
    case LayerKind::n2e_deconv: pre = n2e_deconv_preactivation(std::get<NodeTensor>(x), k); break;
    case LayerKind::e2e_deconv:
      pre = e2e_deconv_preactivation(std::get<FeatureTensor>(x), k);
      break;
    case LayerKind::node_to_graph:
      pre = node_to_graph_preactivation(std::get<NodeTensor>(x), k);
      break;
    case LayerKind::dense: {
      if (k.n != 1) throw ShapeError("dense layer kernels must have n == 1");
      pre = node_to_graph_preactivation(as_node_tensor(std::get<std::vector<double>>(x)), k);
      break;
    }
  }
  if (cache != nullptr) *cache = LayerCache{kind, x, pre};
  std::visit(
      [&](auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, std::vector<double>>) {
          apply_activation(t, k.activation);
        } else {
          apply_activation(t.data(), k.activation);
        }
      },
      pre);
  return pre;
}

LayerGradients layer_backward(const LayerKernels& k, const LayerCache& cache,
                              const Tensor& grad_out) {
  if (grad_out.index() != cache.preactivation.index()) {
    throw ShapeError("gradient type does not match the layer output");
  }
  Tensor grad_pre = grad_out;
  std::visit(
      [&](auto& g) {
        using T = std::decay_t<decltype(g)>;
        const auto& pre = std::get<T>(cache.preactivation);
        if constexpr (std::is_same_v<T, std::vector<double>>) {
          if (g.size() != pre.size()) throw ShapeError("gradient shape mismatch");
          activation_backward(pre, g, k.activation);
        } else {
          if (g.data().size() != pre.data().size()) throw ShapeError("gradient shape mismatch");
          activation_backward(pre.data(), g.data(), k.activation);
        }
      },
      grad_pre);

  switch (cache.kind) {
    case LayerKind::e2e_conv: {
      auto r = e2e_conv_backward(std::get<FeatureTensor>(cache.input), k,
                                 std::get<FeatureTensor>(grad_pre));
      return {std::move(r.input), std::move(r.kernels)};
    }
    case LayerKind::e2n_conv: {
      auto r = e2n_conv_backward(std::get<FeatureTensor>(cache.input), k,
                                 std::get<NodeTensor>(grad_pre));
      return {std::move(r.input), std::move(r.kernels)};
    }
    case LayerKind::n2e_deconv: {
      auto r = n2e_deconv_backward(std::get<NodeTensor>(cache.input), k,
                                   std::get<FeatureTensor>(grad_pre));
      return {std::move(r.input), std::move(r.kernels)};
    }
    case LayerKind::e2e_deconv: {
      auto r = e2e_deconv_backward(std::get<FeatureTensor>(cache.input), k,
                                   std::get<FeatureTensor>(grad_pre));
      return {std::move(r.input), std::move(r.kernels)};
    }
    case LayerKind::node_to_graph: {
      auto r = node_to_graph_backward(std::get<NodeTensor>(cache.input), k,
                                      std::get<std::vector<double>>(grad_pre));
      return {std::move(r.input), std::move(r.kernels)};
    }
    case LayerKind::dense: {
      auto r = dense_backward(std::get<std::vector<double>>(cache.input), k,
                              std::get<std::vector<double>>(grad_pre));
      return {std::move(r.input), std::move(r.kernels)};
    }
  }
  throw std::invalid_argument("unknown layer kind");
}

namespace {

std::vector<double>& tensor_values(Tensor& t) {
  return std::visit(
      [](auto& v) -> std::vector<double>& {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<double>>) {
          return v;
        } else {
          return v.data();
        }
      },
      t);
}

Tensor random_input(LayerKind kind, std::size_t n, std::size_t maps, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t;
  switch (kind) {
    case LayerKind::e2e_conv:
    case LayerKind::e2n_conv:
    case LayerKind::e2e_deconv: t = FeatureTensor(n, maps); break;
    case LayerKind::n2e_deconv:
    case LayerKind::node_to_graph: t = NodeTensor(n, maps); break;
    case LayerKind::dense: t = std::vector<double>(maps); break;
  }
  for (double& v : tensor_values(t)) v = u(rng);
  return t;
}

}  // namespace

GradCheckResult grad_check(LayerKind kind, std::size_t n, std::size_t in_maps,
                           std::size_t out_maps, std::uint64_t seed,
                           const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0 && options.epsilon <= 1e-2)) {
    throw std::invalid_argument("grad_check epsilon must be in (0, 1e-2]");
  }
  const bool with_psi = kind != LayerKind::node_to_graph && kind != LayerKind::dense;
  const std::size_t kernel_n = kind == LayerKind::dense ? 1 : n;
  const double eps = options.epsilon;

  for (std::uint64_t trial = 0;; ++trial) {
    Rng rng(derive_seed(seed, trial));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LayerKernels k = LayerKernels::zeros(in_maps, out_maps, kernel_n, options.activation, with_psi);
    for (double& v : k.phi) v = u(rng);
    for (double& v : k.psi) v = u(rng);
    for (double& v : k.bias) v = 0.5 * u(rng);
    Tensor x = random_input(kind, n, in_maps, rng);

    LayerCache cache;
    Tensor y = layer_forward(kind, x, k, &cache);
    Tensor weights = y;
    for (double& v : tensor_values(weights)) v = u(rng);

    const auto& pre = tensor_values(cache.preactivation);
    double min_abs_pre = std::numeric_limits<double>::infinity();
    for (double v : pre) min_abs_pre = std::min(min_abs_pre, std::abs(v));

    if (options.activation == Activation::relu && options.avoid_kinks) {
      // Largest change of any pre-activation under one probe of size eps.
      double max_kernel = 1.0;
      for (double v : k.phi) max_kernel = std::max(max_kernel, std::abs(v));
      for (double v : k.psi) max_kernel = std::max(max_kernel, std::abs(v));
      const double reach = eps * std::max(2.0 * max_kernel, static_cast<double>(n));
      if (min_abs_pre < 10.0 * reach && trial < 1000) continue;
    }

    const std::vector<double>& w = tensor_values(weights);
    auto loss = [&](const Tensor& input, const LayerKernels& kern) {
      Tensor out = layer_forward(kind, input, kern);
      const auto& vals = tensor_values(out);
      double s = 0.0;
      for (std::size_t t = 0; t < vals.size(); ++t) s += w[t] * vals[t];
      return s;
    };

    const LayerGradients analytic = layer_backward(k, cache, weights);
    GradCheckResult result;
    result.min_abs_preactivation = min_abs_pre;
    auto compare = [&](double a, double numeric) {
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.coordinates;
    };
    auto probe = [&](double& slot, const std::function<double()>& f) {
      const double saved = slot;
      slot = saved + eps;
      const double plus = f();
      slot = saved - eps;
      const double minus = f();
      slot = saved;
      return (plus - minus) / (2.0 * eps);
    };

    auto params_loss = [&] { return loss(x, k); };
    for (std::size_t t = 0; t < k.phi.size(); ++t) {
      compare(analytic.kernels.phi[t], probe(k.phi[t], params_loss));
    }
    for (std::size_t t = 0; t < k.psi.size(); ++t) {
      compare(analytic.kernels.psi[t], probe(k.psi[t], params_loss));
    }
    for (std::size_t t = 0; t < k.bias.size(); ++t) {
      compare(analytic.kernels.bias[t], probe(k.bias[t], params_loss));
    }
    Tensor grad_in = analytic.input;
    const auto& grad_in_values = tensor_values(grad_in);
    auto& xs = tensor_values(x);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      compare(grad_in_values[t], probe(xs[t], params_loss));
    }
    return result;
  }
}

}  // namespace gtgan
