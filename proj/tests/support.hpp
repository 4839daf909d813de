#pragma once

// Small generators shared by the test binaries.

#include <cstddef>
#include <random>
#include <vector>

#include "gtgan/graph.hpp"
#include "gtgan/rng.hpp"
#include "gtgan/tensor.hpp"

namespace testing_support {

using gtgan::DirectedGraph;
using gtgan::Rng;

inline DirectedGraph random_graph(std::size_t n, double p, Rng& rng, bool weighted = false,
                                  bool self_loops = false) {
  std::bernoulli_distribution edge(p);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j && !self_loops) continue;
      if (edge(rng)) a[i * n + j] = weighted ? w(rng) : 1.0;
    }
  }
  return DirectedGraph::from_dense(n, std::move(a));
}

inline std::vector<double> random_values(std::size_t count, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(count);
  for (double& x : v) x = u(rng);
  return v;
}

// A probability vector with roughly `zero_fraction` of its entries zero.
inline std::vector<double> random_distribution(std::size_t size, Rng& rng, double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(size, 0.0);
  double total = 0.0;
  for (double& x : p) {
    if (u(rng) >= zero_fraction) x = u(rng) + 1e-3;
    total += x;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (double& x : p) x /= total;
  return p;
}

inline gtgan::FeatureTensor random_features(std::size_t n, std::size_t maps, Rng& rng) {
  gtgan::FeatureTensor t(n, maps);
  for (double& x : t.data()) x = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  return t;
}

inline gtgan::NodeTensor random_nodes(std::size_t n, std::size_t maps, Rng& rng) {
  gtgan::NodeTensor t(n, maps);
  for (double& x : t.data()) x = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  return t;
}

}  // namespace testing_support
