#include "gtgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gtgan/rng.hpp"

namespace gtgan {

namespace {

constexpr std::uint64_t kSplitSalt = 0x5b1e;
constexpr std::size_t kMaxPreferentialAttempts = 1000;

// Simple directed graph under construction with degree bookkeeping for the
// preferential moves.
class GrowingGraph {
 public:
  explicit GrowingGraph(std::size_t capacity)
      : capacity_(capacity), adj_(capacity * capacity, 0), in_(capacity, 0), out_(capacity, 0) {}

  std::size_t nodes() const { return nodes_; }
  std::size_t edges() const { return edges_; }
  void add_node() { ++nodes_; }

  bool has_edge(std::size_t u, std::size_t v) const { return adj_[u * capacity_ + v] != 0; }

  bool try_add_edge(std::size_t u, std::size_t v) {
    if (u == v || has_edge(u, v)) return false;
    adj_[u * capacity_ + v] = 1;
    ++out_[u];
    ++in_[v];
    ++edges_;
    return true;
  }

  std::size_t pick_by_in(Rng& rng, double delta) const { return pick(in_, rng, delta); }
  std::size_t pick_by_out(Rng& rng, double delta) const { return pick(out_, rng, delta); }

  std::size_t pick_by_total(Rng& rng) const {
    double total = 0.0;
    for (std::size_t v = 0; v < nodes_; ++v) total += static_cast<double>(in_[v] + out_[v]);
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    for (std::size_t v = 0; v < nodes_; ++v) {
      r -= static_cast<double>(in_[v] + out_[v]);
      if (r < 0.0) return v;
    }
    return nodes_ - 1;
  }

  DirectedGraph to_graph() const {
    std::vector<double> w(nodes_ * nodes_, 0.0);
    for (std::size_t i = 0; i < nodes_; ++i) {
      for (std::size_t j = 0; j < nodes_; ++j) w[i * nodes_ + j] = has_edge(i, j) ? 1.0 : 0.0;
    }
    return DirectedGraph::from_dense(nodes_, std::move(w));
  }

  static GrowingGraph from_graph(const DirectedGraph& g) {
    GrowingGraph out(g.n());
    for (std::size_t v = 0; v < g.n(); ++v) out.add_node();
    for (const Edge& e : g.edges()) out.try_add_edge(e.source, e.target);
    return out;
  }

 private:
  std::size_t pick(const std::vector<std::size_t>& degree, Rng& rng, double delta) const {
    double total = 0.0;
    for (std::size_t v = 0; v < nodes_; ++v) total += static_cast<double>(degree[v]) + delta;
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    for (std::size_t v = 0; v < nodes_; ++v) {
      r -= static_cast<double>(degree[v]) + delta;
      if (r < 0.0) return v;
    }
    return nodes_ - 1;
  }

  std::size_t capacity_;
  std::size_t nodes_ = 0;
  std::size_t edges_ = 0;
  std::vector<char> adj_;
  std::vector<std::size_t> in_;
  std::vector<std::size_t> out_;
};

std::vector<std::pair<std::size_t, std::size_t>> non_edges(const GrowingGraph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    for (std::size_t j = 0; j < g.nodes(); ++j) {
      if (i != j && !g.has_edge(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

// Adds `count` distinct uniformly random non-edges (sampling without
// replacement). Returns how many were added.
std::size_t add_uniform_edges(GrowingGraph& g, std::size_t count, Rng& rng) {
  auto candidates = non_edges(g);
  const std::size_t take = std::min(count, candidates.size());
  for (std::size_t k = 0; k < take; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
    g.try_add_edge(candidates[k].first, candidates[k].second);
  }
  return take;
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::scale_free: return "scale_free";
    case DatasetKind::poisson: return "poisson";
    case DatasetKind::auth: return "auth";
  }
  return "unknown";
}

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "scale_free" || text == "scale-free") return DatasetKind::scale_free;
  if (text == "poisson") return DatasetKind::poisson;
  if (text == "auth") return DatasetKind::auth;
  throw std::invalid_argument("unknown dataset kind '" + std::string(text) +
                              "' (valid kinds: scale_free, poisson, auth)");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + std::string(text) + "' (valid: train, test)");
}

std::vector<std::size_t> Dataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

std::vector<GraphPair> Dataset::subset(Split which) const {
  std::vector<GraphPair> out;
  for (std::size_t i : indices(which)) out.push_back(pairs[i]);
  return out;
}

void Dataset::validate() const {
  if (split.size() != pairs.size()) {
    throw std::invalid_argument("dataset split assignment does not cover all pairs");
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].input.n() != n || pairs[i].target.n() != n) {
      throw std::invalid_argument("pair " + std::to_string(i) + " has node count " +
                                  std::to_string(pairs[i].input.n()) + "/" +
                                  std::to_string(pairs[i].target.n()) + ", dataset n is " +
                                  std::to_string(n));
    }
  }
}

GraphPair gen_scale_free_pair(std::size_t n, double beta, std::uint64_t seed) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("scale-free beta must be in (0,1)");
  ScaleFreeParams params;
  params.beta = beta;
  params.alpha = (1.0 - beta) / 2.0;
  params.gamma = (1.0 - beta) / 2.0;
  return gen_scale_free_pair(n, params, seed);
}

GraphPair gen_scale_free_pair(std::size_t n, const ScaleFreeParams& p, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("scale-free generation needs n >= 3");
  if (std::abs(p.alpha + p.beta + p.gamma - 1.0) > 1e-9 || p.alpha < 0 || p.beta <= 0 ||
      p.gamma < 0) {
    throw std::invalid_argument("scale-free move probabilities must be nonnegative and sum to 1");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GrowingGraph g(n);
  for (int k = 0; k < 3; ++k) g.add_node();
  g.try_add_edge(0, 1);
  g.try_add_edge(1, 2);
  g.try_add_edge(2, 0);

  while (g.nodes() < n) {
    const double r = unit(rng);
    if (r < p.alpha) {
      const std::size_t w = g.pick_by_in(rng, p.delta_in);
      g.add_node();
      g.try_add_edge(g.nodes() - 1, w);
    } else if (r < p.alpha + p.beta) {
      const std::size_t v = g.pick_by_out(rng, p.delta_out);
      const std::size_t w = g.pick_by_in(rng, p.delta_in);
      g.try_add_edge(v, w);  // self-loops and duplicates are rejected moves
    } else {
      const std::size_t v = g.pick_by_out(rng, p.delta_out);
      g.add_node();
      g.try_add_edge(v, g.nodes() - 1);
    }
  }

  GraphPair pair;
  pair.input = g.to_graph();

  const std::size_t input_edges = g.edges();
  const std::size_t capacity = n * (n - 1);
  const std::size_t wanted = std::min(input_edges, capacity - input_edges);
  std::size_t added = 0;
  while (added < wanted) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxPreferentialAttempts && !placed; ++attempt) {
      const std::size_t v = g.pick_by_out(rng, p.delta_out);
      const std::size_t w = g.pick_by_in(rng, p.delta_in);
      placed = g.try_add_edge(v, w);
    }
    // Near saturation the preferential sampler rarely hits a free slot.
    if (!placed) add_uniform_edges(g, 1, rng);
    ++added;
  }
  pair.target = g.to_graph();
  pair.meta["seed"] = seed;
  pair.meta["added_edges"] = added;
  pair.meta["capped"] = wanted < input_edges;
  return pair;
}

GraphPair gen_poisson_pair(std::size_t n, double lambda, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("poisson pair generation needs n >= 3");
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson lambda must be > 0");
  Rng rng(seed);

  GrowingGraph g(n);
  g.add_node();
  g.add_node();
  g.try_add_edge(1, 0);
  for (std::size_t v = 2; v < n; ++v) {
    const std::size_t t = g.pick_by_total(rng);
    g.add_node();
    g.try_add_edge(v, t);
  }

  GraphPair pair;
  pair.input = g.to_graph();

  std::poisson_distribution<std::uint64_t> poisson(lambda);
  const std::uint64_t k = poisson(rng);
  const std::size_t input_edges = g.edges();
  const std::size_t wanted = static_cast<std::size_t>(k) * input_edges;
  const std::size_t added = add_uniform_edges(g, wanted, rng);
  pair.target = g.to_graph();
  pair.meta["seed"] = seed;
  pair.meta["k"] = k;
  pair.meta["added_edges"] = added;
  pair.meta["capped"] = added < wanted;
  return pair;
}

Dataset make_dataset(DatasetKind kind, std::size_t n, std::size_t count, double train_fraction,
                     std::uint64_t seed, const DatasetOptions& options) {
  if (count < 2) throw std::invalid_argument("dataset needs at least 2 pairs");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0,1)");
  }
  if (kind == DatasetKind::auth) {
    throw std::invalid_argument("auth datasets are built from authentication logs, not generated");
  }

  Dataset ds;
  ds.kind = kind;
  ds.n = n;
  ds.pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t pair_seed = derive_seed(seed, i);
    ds.pairs.push_back(kind == DatasetKind::scale_free
                           ? gen_scale_free_pair(n, options.beta, pair_seed)
                           : gen_poisson_pair(n, options.lambda, pair_seed));
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0, kSplitSalt));
  std::shuffle(order.begin(), order.end(), rng);
  const auto train_count =
      static_cast<std::size_t>(std::floor(static_cast<double>(count) * train_fraction));
  ds.split.assign(count, Split::test);
  for (std::size_t k = 0; k < train_count; ++k) ds.split[order[k]] = Split::train;
  return ds;
}

void split_by_group(Dataset& ds, const std::string& key, double train_fraction,
                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0,1)");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto it = ds.pairs[i].meta.find(key);
    if (it == ds.pairs[i].meta.end()) {
      throw std::invalid_argument("pair " + std::to_string(i) + " has no meta key '" + key + "'");
    }
    groups[it->is_string() ? it->get<std::string>() : it->dump()].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> order;
  for (const auto& [name, members] : groups) order.push_back(&members);
  Rng rng(derive_seed(seed, 1, kSplitSalt));
  std::shuffle(order.begin(), order.end(), rng);
  const auto train_groups =
      static_cast<std::size_t>(std::floor(static_cast<double>(order.size()) * train_fraction));
  ds.split.assign(ds.pairs.size(), Split::test);
  for (std::size_t g = 0; g < train_groups; ++g) {
    for (std::size_t i : *order[g]) ds.split[i] = Split::train;
  }
}

}  // namespace gtgan
