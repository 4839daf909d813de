#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gtgan/metrics.hpp"
#include "gtgan/synth.hpp"
#include "support.hpp"

using namespace gtgan;
using namespace testing_support;

namespace {

using Vec = std::vector<double>;

// Direct transcriptions of the definitions, kept deliberately naive.
double js_oracle(const Vec& p, const Vec& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::sqrt(std::max(0.0, d));
}

double bc_oracle(const Vec& p, const Vec& q) {
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return bc;
}

// Greedy matching of sorted mass, which is an optimal plan on the line.
double transport_oracle(const std::vector<std::size_t>& x, Vec p, Vec q) {
  std::size_t i = 0, j = 0;
  double cost = 0.0;
  while (i < p.size() && j < q.size()) {
    if (p[i] <= 1e-15) { ++i; continue; }
    if (q[j] <= 1e-15) { ++j; continue; }
    const double moved = std::min(p[i], q[j]);
    cost += moved * std::abs(static_cast<double>(x[i]) - static_cast<double>(x[j]));
    p[i] -= moved;
    q[j] -= moved;
  }
  return cost;
}

AlignedDistributions aligned(std::vector<std::size_t> support, Vec p, Vec q) {
  return {std::move(support), std::move(p), std::move(q)};
}

DirectedGraph graph_with_edges(std::size_t n, std::size_t count) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n && edges.size() < count; ++i)
    for (std::size_t j = 0; j < n && edges.size() < count; ++j)
      if (i != j) edges.push_back({i, j, 1.0});
  return DirectedGraph::from_edges(n, edges);
}

DirectedGraph complete(std::size_t n) { return graph_with_edges(n, n * (n - 1)); }

}  // namespace

TEST_CASE("distance examples") {
  CHECK(js_distance(Vec{1, 0}, Vec{0.5, 0.5}) == doctest::Approx(0.5579).epsilon(1e-4));
  // JSD here is 1.5 - 0.75 log2 3
  CHECK(js_distance(Vec{1, 0}, Vec{0.5, 0.5}) == doctest::Approx(std::sqrt(1.5 - 0.75 * std::log2(3.0))));
  CHECK(js_distance(Vec{1, 0}, Vec{0, 1}) == doctest::Approx(1.0));
  CHECK(js_distance(Vec{0.3, 0.7}, Vec{0.3, 0.7}) == 0.0);

  CHECK(hellinger(Vec{0.5, 0.5}, Vec{0.9, 0.1}) ==
        doctest::Approx(std::sqrt(1 - (std::sqrt(0.45) + std::sqrt(0.05)))));
  CHECK(hellinger(Vec{0.5, 0.5}, Vec{0.9, 0.1}) == doctest::Approx(0.3249).epsilon(1e-3));
  CHECK(hellinger(Vec{1, 0}, Vec{0, 1}) == 1.0);

  CHECK(bhattacharyya(Vec{0.5, 0.5}, Vec{0.9, 0.1}) == doctest::Approx(0.1116).epsilon(1e-3));
  CHECK(std::isinf(bhattacharyya(Vec{1, 0}, Vec{0, 1})));
  CHECK(bhattacharyya(Vec{0.2, 0.8}, Vec{0.2, 0.8}) == doctest::Approx(0.0));

  CHECK(wasserstein1(aligned({0, 3}, {1, 0}, {0, 1})) == 3.0);
  CHECK(wasserstein1(aligned({0, 1}, {0.5, 0.5}, {0, 1})) == 0.5);
  CHECK(wasserstein1(aligned({2, 5, 9}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5})) == 0.0);
}

TEST_CASE("distances agree with naive oracles") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t size = 1 + trial % 9;
    const auto p = random_distribution(size, rng, 0.3);
    const auto q = random_distribution(size, rng, 0.3);
    CHECK(js_distance(p, q) == doctest::Approx(js_oracle(p, q)).epsilon(1e-10));
    const double bc = bc_oracle(p, q);
    CHECK(hellinger(p, q) == doctest::Approx(std::sqrt(std::max(0.0, 1 - bc))).epsilon(1e-10));
    if (bc > 0) CHECK(bhattacharyya(p, q) == doctest::Approx(-std::log(bc)).epsilon(1e-10));

    std::vector<std::size_t> support(size);
    std::size_t at = 0;
    for (auto& s : support) s = at += 1 + rng() % 4;
    CHECK(wasserstein1(aligned(support, p, q)) == doctest::Approx(transport_oracle(support, p, q)).epsilon(1e-10));
  }
}

TEST_CASE("symmetry, identity and triangle inequality") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t size = 2 + trial % 7;
    const auto p = random_distribution(size, rng, 0.25);
    const auto q = random_distribution(size, rng, 0.25);
    const auto r = random_distribution(size, rng, 0.25);
    CHECK(std::abs(js_distance(p, q) - js_distance(q, p)) <= 1e-12);
    CHECK(std::abs(hellinger(p, q) - hellinger(q, p)) <= 1e-12);
    const double bpq = bhattacharyya(p, q), bqp = bhattacharyya(q, p);
    CHECK((std::isinf(bpq) ? std::isinf(bqp) : std::abs(bpq - bqp) <= 1e-12));
    std::vector<std::size_t> support(size);
    for (std::size_t k = 0; k < size; ++k) support[k] = 2 * k;
    CHECK(std::abs(wasserstein1(aligned(support, p, q)) - wasserstein1(aligned(support, q, p))) <= 1e-12);

    CHECK(js_distance(p, r) <= js_distance(p, q) + js_distance(q, r) + 1e-9);
    CHECK(hellinger(p, r) <= hellinger(p, q) + hellinger(q, r) + 1e-9);

    CHECK(js_distance(p, p) == doctest::Approx(0.0));
    CHECK(hellinger(p, p) <= 1e-7);
    CHECK(std::abs(bhattacharyya(p, p)) <= 1e-12);
    CHECK(wasserstein1(aligned(support, p, p)) == 0.0);
    if (p != q) CHECK(js_distance(p, q) > 0.0);
  }
}

TEST_CASE("moving mass farther never reduces wasserstein") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t size = 3 + trial % 6;
    std::vector<std::size_t> support(size);
    for (std::size_t k = 0; k < size; ++k) support[k] = k;
    const auto p = random_distribution(size, rng);
    auto q = random_distribution(size, rng);
    const double before = wasserstein1(aligned(support, p, q));
    // shift some of q's mass one step further away from p's mean
    double mean_p = 0.0;
    for (std::size_t k = 0; k < size; ++k) mean_p += static_cast<double>(k) * p[k];
    std::size_t src = rng() % size;
    const bool right = static_cast<double>(src) >= mean_p;
    // keep the move on one side of every p-mass point so it is strictly farther
    if (right) {
      std::size_t last_p = 0;
      for (std::size_t k = 0; k < size; ++k) if (p[k] > 0) last_p = k;
      if (src < last_p || src + 1 >= size) continue;
      const double moved = q[src] * 0.5;
      q[src] -= moved;
      q[src + 1] += moved;
    } else {
      std::size_t first_p = size;
      for (std::size_t k = size; k-- > 0;) if (p[k] > 0) first_p = k;
      if (src > first_p || src == 0) continue;
      const double moved = q[src] * 0.5;
      q[src] -= moved;
      q[src - 1] += moved;
    }
    CHECK(wasserstein1(aligned(support, p, q)) >= before - 1e-12);
  }
}

TEST_CASE("align") {
  const DegreeDistribution a{{1, 4}, {0.5, 0.5}};
  const DegreeDistribution b{{2, 4}, {0.25, 0.75}};
  const auto al = align(a, b);
  CHECK(al.support == std::vector<std::size_t>{1, 2, 4});
  CHECK(al.p == Vec{0.5, 0.0, 0.5});
  CHECK(al.q == Vec{0.0, 0.25, 0.75});
  CHECK(distance_report(a, a).wasserstein == 0.0);
  CHECK(distance_report(a, b).wasserstein == doctest::Approx(transport_oracle(al.support, al.p, al.q)));
}

TEST_CASE("degree distance report") {
  const std::vector<DirectedGraph> empty{DirectedGraph(4)}, full{complete(4)};
  const auto r = degree_distance_report(empty, full);
  CHECK(r.wasserstein == 6.0);  // every node has total degree 0 against 6
  CHECK(r.js == doctest::Approx(1.0));
  CHECK(std::isinf(r.bhattacharyya));
  CHECK(to_json(r)["bhattacharyya"] == "Inf");
  CHECK(to_json(degree_distance_report(full, full))["bhattacharyya"] == 0.0);

  Rng rng(4);
  std::vector<DirectedGraph> g, h;
  for (int k = 0; k < 6; ++k) {
    g.push_back(random_graph(7, 0.3, rng, true));
    h.push_back(random_graph(7, 0.5, rng));
  }
  const auto same = degree_distance_report(g, g);
  CHECK(same.js == 0.0);
  CHECK(same.wasserstein == 0.0);
  CHECK(same.bhattacharyya == doctest::Approx(0.0));
  const auto base = degree_distance_report(g, h);
  std::reverse(g.begin(), g.end());
  std::rotate(h.begin(), h.begin() + 2, h.end());
  const auto shuffled = degree_distance_report(g, h);
  CHECK(shuffled.js == doctest::Approx(base.js).epsilon(1e-12));
  CHECK(shuffled.wasserstein == doctest::Approx(base.wasserstein).epsilon(1e-12));

  // sub-threshold weights do not count as edges
  const auto faint = DirectedGraph::from_dense(4, Vec(16, 0.5));
  CHECK(degree_distance_report(std::vector{faint}, empty).wasserstein == 0.0);
  CHECK_THROWS_AS(degree_distance_report({}, empty), std::invalid_argument);
}

TEST_CASE("property mse") {
  const std::vector<DirectedGraph> low{graph_with_edges(6, 6)}, high{graph_with_edges(6, 12)};
  const auto r = property_mse_report(low, high);
  CHECK(r.density_mse == doctest::Approx(0.04));
  CHECK(r.average_degree_mse == doctest::Approx(4.0));  // 2*6/6 against 2*12/6
  CHECK(r.pairs == 1);
  CHECK(r.reciprocity_excluded == 0);

  Rng rng(5);
  std::vector<DirectedGraph> g, h;
  for (int k = 0; k < 8; ++k) {
    g.push_back(random_graph(6, 0.4, rng));
    h.push_back(random_graph(6, 0.4, rng));
  }
  g.push_back(DirectedGraph(6));
  h.push_back(random_graph(6, 0.4, rng));
  const auto gh = property_mse_report(g, h), hg = property_mse_report(h, g);
  CHECK(gh.density_mse == hg.density_mse);
  CHECK(gh.average_degree_mse == hg.average_degree_mse);
  CHECK(gh.reciprocity_mse == hg.reciprocity_mse);
  CHECK(gh.degree_wasserstein == doctest::Approx(hg.degree_wasserstein).epsilon(1e-12));
  CHECK(gh.reciprocity_excluded == 1);
  CHECK(gh.pairs == 9);

  double rec = 0.0;
  for (std::size_t k = 0; k < 8; ++k) {
    const double d = *reciprocity(g[k]) - *reciprocity(h[k]);
    rec += d * d / 8;
  }
  CHECK(gh.reciprocity_mse == doctest::Approx(rec).epsilon(1e-12));

  const auto same = property_mse_report(g, g);
  CHECK(same.density_mse == 0.0);
  CHECK(same.reciprocity_mse == 0.0);
  CHECK(same.degree_wasserstein == 0.0);
  CHECK_THROWS_AS(property_mse_report(g, low), std::invalid_argument);

  const auto j = to_json(gh);
  CHECK(j["reciprocity_excluded"] == 1);
  CHECK(j.contains("degree_wasserstein"));
}

TEST_CASE("estimate_k") {
  CHECK(estimate_k(graph_with_edges(30, 100), graph_with_edges(30, 450)) == 3.5);
  const auto g = graph_with_edges(5, 7);
  CHECK(estimate_k(g, g) == 0.0);
  CHECK(estimate_k(graph_with_edges(5, 8), graph_with_edges(5, 4)) == -0.5);
  CHECK_THROWS_AS(estimate_k(DirectedGraph(5), g), std::invalid_argument);

  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = gen_poisson_pair(30, 5.0, seed);
    if (p.meta.at("capped").get<bool>()) continue;
    ++checked;
    CHECK(estimate_k(p.input, p.target) == p.meta.at("k").get<double>());
  }
  CHECK(checked > 50);
}
