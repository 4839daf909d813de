#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gtgan/graph.hpp"

namespace gtgan {

/// Input graph and its translation target on the same node set. `meta`
/// carries generation records (sampled k, seed, node labels, ...) and any
/// keys read back from disk.
struct GraphPair {
  DirectedGraph input;
  DirectedGraph target;
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const GraphPair&) const = default;
};

enum class DatasetKind { scale_free, poisson, auth };
enum class Split { train, test };

std::string_view to_string(DatasetKind kind);
std::string_view to_string(Split split);
/// Accepts "scale_free" / "scale-free", "poisson", "auth". Throws
/// std::invalid_argument listing the valid kinds otherwise.
DatasetKind parse_dataset_kind(std::string_view text);
Split parse_split(std::string_view text);

struct Dataset {
  DatasetKind kind = DatasetKind::poisson;
  std::size_t n = 0;
  std::vector<GraphPair> pairs;
  std::vector<Split> split;  // parallel to pairs

  std::vector<std::size_t> indices(Split which) const;
  std::vector<GraphPair> subset(Split which) const;

  /// Throws std::invalid_argument when pairs disagree on n or split is not
  /// parallel to pairs.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

struct ScaleFreeParams {
  double alpha = 0.23;     // new node with an edge to an existing node
  double beta = 0.54;      // edge between two existing nodes
  double gamma = 0.23;     // new node with an edge from an existing node
  double delta_in = 0.2;   // in-degree smoothing
  double delta_out = 0.2;  // out-degree smoothing
};

/// Directed scale-free growth until n nodes exist, seeded by a 3-cycle. The
/// target continues the input with |E(input)| edge additions between
/// existing nodes (capped at the simple-graph capacity n(n-1)).
GraphPair gen_scale_free_pair(std::size_t n, double beta, std::uint64_t seed);
GraphPair gen_scale_free_pair(std::size_t n, const ScaleFreeParams& params, std::uint64_t seed);

/// Barabasi-Albert input (one edge per new node, oriented newer -> older).
/// The target adds min(k|E|, capacity) uniformly random non-edges with
/// k ~ Poisson(lambda).
GraphPair gen_poisson_pair(std::size_t n, double lambda, std::uint64_t seed);

struct DatasetOptions {
  double beta = 0.54;
  double lambda = 5.0;
};

/// `count` pairs with per-index derived seeds, then a seeded shuffle puts
/// the first floor(count * train_fraction) into the train split.
Dataset make_dataset(DatasetKind kind, std::size_t n, std::size_t count, double train_fraction,
                     std::uint64_t seed, const DatasetOptions& options = {});

/// Reassigns splits so that whole groups (pairs sharing meta[key]) land on
/// one side; floor(groups * train_fraction) groups go to train.
void split_by_group(Dataset& ds, const std::string& key, double train_fraction,
                    std::uint64_t seed);

}  // namespace gtgan
