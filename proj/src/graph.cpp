#include "gtgan/graph.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace gtgan {

DirectedGraph::DirectedGraph(std::size_t n) : n_(n), weights_(n * n, 0.0) {}

DirectedGraph DirectedGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
  DirectedGraph g(n);
  std::vector<bool> seen(n * n, false);
  for (const Edge& e : edges) {
    if (e.source >= n || e.target >= n) {
      throw std::invalid_argument("edge (" + std::to_string(e.source) + "," +
                                  std::to_string(e.target) + ") out of range for n=" +
                                  std::to_string(n));
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("edge (" + std::to_string(e.source) + "," +
                                  std::to_string(e.target) + ") has invalid weight " +
                                  std::to_string(e.weight));
    }
    const std::size_t idx = e.source * n + e.target;
    if (seen[idx]) {
      throw std::invalid_argument("duplicate edge (" + std::to_string(e.source) + "," +
                                  std::to_string(e.target) + ")");
    }
    seen[idx] = true;
    g.weights_[idx] = e.weight;
  }
  return g;
}

DirectedGraph DirectedGraph::from_dense(std::size_t n, std::vector<double> weights) {
  if (weights.size() != n * n) {
    throw std::invalid_argument("dense weights size " + std::to_string(weights.size()) +
                                " does not match n*n for n=" + std::to_string(n));
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("graph weights must be finite and nonnegative");
    }
  }
  DirectedGraph g;
  g.n_ = n;
  g.weights_ = std::move(weights);
  return g;
}

std::size_t DirectedGraph::edge_count() const {
  std::size_t count = 0;
  for (double w : weights_) count += w > 0.0 ? 1 : 0;
  return count;
}

std::vector<Edge> DirectedGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double w = weight(i, j);
      if (w > 0.0) out.push_back({i, j, w});
    }
  }
  return out;
}

double DegreeDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    m += static_cast<double>(support[k]) * probabilities[k];
  }
  return m;
}

DirectedGraph binarize(const DirectedGraph& g, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("binarize threshold must be >= 0");
  std::vector<double> w(g.weights().size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = g.weights()[k] > threshold ? 1.0 : 0.0;
  return DirectedGraph::from_dense(g.n(), std::move(w));
}

double density(const DirectedGraph& g) {
  const std::size_t n = g.n();
  if (n < 2) throw std::invalid_argument("density requires n >= 2");
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && g.has_edge(i, j)) ++count;
    }
  }
  return static_cast<double>(count) / static_cast<double>(n * (n - 1));
}

std::optional<double> reciprocity(const DirectedGraph& g) {
  const std::size_t n = g.n();
  std::size_t edges = 0;
  std::size_t mutual = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!g.has_edge(i, j)) continue;
      ++edges;
      if (g.has_edge(j, i)) ++mutual;
    }
  }
  if (edges == 0) return std::nullopt;
  return static_cast<double>(mutual) / static_cast<double>(edges);
}

double average_degree(const DirectedGraph& g) {
  if (g.n() == 0) throw std::invalid_argument("average_degree requires n >= 1");
  return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.n());
}

std::vector<std::size_t> total_degrees(const DirectedGraph& g) {
  const std::size_t n = g.n();
  std::vector<std::size_t> deg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (g.has_edge(i, j)) {
        ++deg[i];
        ++deg[j];
      }
    }
  }
  return deg;
}

std::vector<std::size_t> in_degrees(const DirectedGraph& g) {
  const std::size_t n = g.n();
  std::vector<std::size_t> deg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (g.has_edge(i, j)) ++deg[j];
    }
  }
  return deg;
}

DegreeDistribution distribution_from_degrees(std::span<const std::size_t> degrees) {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t d : degrees) ++counts[d];
  DegreeDistribution dist;
  const double total = static_cast<double>(degrees.size());
  for (const auto& [degree, count] : counts) {
    dist.support.push_back(degree);
    dist.probabilities.push_back(static_cast<double>(count) / total);
  }
  return dist;
}

DegreeDistribution degree_histogram(const DirectedGraph& g) {
  if (g.n() == 0) throw std::invalid_argument("degree_histogram requires n >= 1");
  const auto deg = total_degrees(g);
  return distribution_from_degrees(deg);
}

DegreeDistribution pooled_degree_histogram(std::span<const DirectedGraph> graphs) {
  std::vector<std::size_t> all;
  for (const auto& g : graphs) {
    const auto deg = total_degrees(g);
    all.insert(all.end(), deg.begin(), deg.end());
  }
  return distribution_from_degrees(all);
}

}  // namespace gtgan
