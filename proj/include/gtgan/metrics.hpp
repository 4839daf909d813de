#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "gtgan/graph.hpp"

namespace gtgan {

struct DistanceReport {
  double js = 0.0;
  double hellinger = 0.0;
  double bhattacharyya = 0.0;  // may be +infinity
  double wasserstein = 0.0;
};

struct PropertyMseReport {
  double density_mse = 0.0;
  double average_degree_mse = 0.0;
  double reciprocity_mse = 0.0;
  double degree_wasserstein = 0.0;
  std::size_t pairs = 0;
  /// Pairs left out of reciprocity_mse because one side has no edges.
  std::size_t reciprocity_excluded = 0;
};

/// Two distributions on the sorted union of their supports.
struct AlignedDistributions {
  std::vector<std::size_t> support;
  std::vector<double> p;
  std::vector<double> q;
};

AlignedDistributions align(const DegreeDistribution& p, const DegreeDistribution& q);

/// Square root of the base-2 Jensen-Shannon divergence, in [0, 1].
double js_distance(std::span<const double> p, std::span<const double> q);
double hellinger(std::span<const double> p, std::span<const double> q);
/// -ln of the Bhattacharyya coefficient; +infinity for disjoint supports.
double bhattacharyya(std::span<const double> p, std::span<const double> q);
/// Earth mover's distance on the integer support.
double wasserstein1(const AlignedDistributions& a);

DistanceReport distance_report(const DegreeDistribution& p, const DegreeDistribution& q);

/// Pools the total degrees of each collection, then compares the pools.
/// Graphs are binarized at 0.5 first.
DistanceReport degree_distance_report(std::span<const DirectedGraph> generated,
                                      std::span<const DirectedGraph> real);

/// Pairwise property errors for index-aligned collections plus the pooled
/// degree Wasserstein distance.
PropertyMseReport property_mse_report(std::span<const DirectedGraph> generated,
                                      std::span<const DirectedGraph> real);

/// (|E(y)| - |E(x)|) / |E(x)| on binarized graphs.
double estimate_k(const DirectedGraph& x, const DirectedGraph& y);

/// Infinite Bhattacharyya values become the string "Inf".
nlohmann::json to_json(const DistanceReport& r);
nlohmann::json to_json(const PropertyMseReport& r);

}  // namespace gtgan
