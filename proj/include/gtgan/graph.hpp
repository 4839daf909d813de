#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gtgan {

struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Dense directed weighted graph. Entry (i, j) is the weight of edge i -> j;
/// an edge exists iff its weight is strictly positive. Immutable once built.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Edgeless graph on n nodes.
  explicit DirectedGraph(std::size_t n);

  /// Builds from an edge list. Throws std::invalid_argument on out-of-range
  /// indices, negative or non-finite weights, and duplicate (source, target).
  static DirectedGraph from_edges(std::size_t n, std::span<const Edge> edges);

  /// Builds from a row-major n*n weight matrix.
  static DirectedGraph from_dense(std::size_t n, std::vector<double> weights);

  std::size_t n() const { return n_; }
  double weight(std::size_t i, std::size_t j) const { return weights_[i * n_ + j]; }
  bool has_edge(std::size_t i, std::size_t j) const { return weight(i, j) > 0.0; }
  const std::vector<double>& weights() const { return weights_; }

  /// Number of entries with positive weight, self-loops included.
  std::size_t edge_count() const;

  /// Nonzero entries in row-major order.
  std::vector<Edge> edges() const;

  bool operator==(const DirectedGraph&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> weights_;
};

struct DegreeDistribution {
  std::vector<std::size_t> support;  // sorted, distinct
  std::vector<double> probabilities;

  double mean() const;
};

DirectedGraph binarize(const DirectedGraph& g, double threshold);

/// Off-diagonal edge count over n(n-1). Requires n >= 2.
double density(const DirectedGraph& g);

/// Fraction of edges whose reverse is also an edge. Empty when the graph has
/// no edges: the value is undefined there, not zero.
std::optional<double> reciprocity(const DirectedGraph& g);

/// 2|E| / n, the mean total degree.
double average_degree(const DirectedGraph& g);

/// In+out degree of every node on the binarized graph. A self-loop adds one
/// to both.
std::vector<std::size_t> total_degrees(const DirectedGraph& g);
std::vector<std::size_t> in_degrees(const DirectedGraph& g);

DegreeDistribution degree_histogram(const DirectedGraph& g);

/// Empirical distribution of a multiset of degrees. Empty input gives an
/// empty distribution.
DegreeDistribution distribution_from_degrees(std::span<const std::size_t> degrees);

/// Degrees of every node of every graph pooled into one distribution.
DegreeDistribution pooled_degree_histogram(std::span<const DirectedGraph> graphs);

}  // namespace gtgan
