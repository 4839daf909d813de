#include "gtgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gtgan {

namespace {

constexpr double kBinarizeThreshold = 0.5;

void check_same_size(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions are not aligned");
}

double coefficient(std::span<const double> p, std::span<const double> q) {
  check_same_size(p, q);
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return bc;
}

double kl2(std::span<const double> p, std::span<const double> m) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log2(p[i] / m[i]);
  }
  return s;
}

std::vector<DirectedGraph> binarized(std::span<const DirectedGraph> graphs) {
  std::vector<DirectedGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(binarize(g, kBinarizeThreshold));
  return out;
}

}  // namespace

AlignedDistributions align(const DegreeDistribution& p, const DegreeDistribution& q) {
  AlignedDistributions a;
  std::set_union(p.support.begin(), p.support.end(), q.support.begin(), q.support.end(),
                 std::back_inserter(a.support));
  a.p.assign(a.support.size(), 0.0);
  a.q.assign(a.support.size(), 0.0);
  auto fill = [&](const DegreeDistribution& d, std::vector<double>& out) {
    for (std::size_t i = 0; i < d.support.size(); ++i) {
      const auto it = std::lower_bound(a.support.begin(), a.support.end(), d.support[i]);
      out[static_cast<std::size_t>(it - a.support.begin())] += d.probabilities[i];
    }
  };
  fill(p, a.p);
  fill(q, a.q);
  return a;
}

double js_distance(std::span<const double> p, std::span<const double> q) {
  check_same_size(p, q);
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double jsd = 0.5 * kl2(p, m) + 0.5 * kl2(q, m);
  return std::sqrt(std::clamp(jsd, 0.0, 1.0));
}

double hellinger(std::span<const double> p, std::span<const double> q) {
  return std::sqrt(std::max(0.0, 1.0 - coefficient(p, q)));
}

double bhattacharyya(std::span<const double> p, std::span<const double> q) {
  const double bc = coefficient(p, q);
  if (bc <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -std::log(bc));
}

double wasserstein1(const AlignedDistributions& a) {
  check_same_size(a.p, a.q);
  if (a.support.size() != a.p.size()) throw std::invalid_argument("support does not match distributions");
  double cdf_p = 0.0, cdf_q = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < a.support.size(); ++i) {
    cdf_p += a.p[i];
    cdf_q += a.q[i];
    total += std::abs(cdf_p - cdf_q) * static_cast<double>(a.support[i + 1] - a.support[i]);
  }
  return total;
}

DistanceReport distance_report(const DegreeDistribution& p, const DegreeDistribution& q) {
  const AlignedDistributions a = align(p, q);
  return {js_distance(a.p, a.q), hellinger(a.p, a.q), bhattacharyya(a.p, a.q), wasserstein1(a)};
}

DistanceReport degree_distance_report(std::span<const DirectedGraph> generated,
                                      std::span<const DirectedGraph> real) {
  if (generated.empty() || real.empty()) throw std::invalid_argument("degree_distance_report needs graphs on both sides");
  const auto g = binarized(generated);
  const auto r = binarized(real);
  return distance_report(pooled_degree_histogram(g), pooled_degree_histogram(r));
}

PropertyMseReport property_mse_report(std::span<const DirectedGraph> generated,
                                      std::span<const DirectedGraph> real) {
  if (generated.size() != real.size()) {
    throw std::invalid_argument("property_mse_report: " + std::to_string(generated.size()) +
                                " generated vs " + std::to_string(real.size()) + " real graphs");
  }
  if (generated.empty()) throw std::invalid_argument("property_mse_report needs at least one pair");
  const auto g = binarized(generated);
  const auto r = binarized(real);
  PropertyMseReport rep;
  rep.pairs = g.size();
  std::size_t reciprocity_pairs = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].n() != r[i].n()) throw std::invalid_argument("pair " + std::to_string(i) + " differs in n");
    const double dd = density(g[i]) - density(r[i]);
    const double da = average_degree(g[i]) - average_degree(r[i]);
    rep.density_mse += dd * dd;
    rep.average_degree_mse += da * da;
    const auto rg = reciprocity(g[i]);
    const auto rr = reciprocity(r[i]);
    if (rg && rr) {
      rep.reciprocity_mse += (*rg - *rr) * (*rg - *rr);
      ++reciprocity_pairs;
    } else {
      ++rep.reciprocity_excluded;
    }
  }
  rep.density_mse /= static_cast<double>(g.size());
  rep.average_degree_mse /= static_cast<double>(g.size());
  if (reciprocity_pairs > 0) rep.reciprocity_mse /= static_cast<double>(reciprocity_pairs);
  const AlignedDistributions a = align(pooled_degree_histogram(g), pooled_degree_histogram(r));
  rep.degree_wasserstein = wasserstein1(a);
  return rep;
}

double estimate_k(const DirectedGraph& x, const DirectedGraph& y) {
  const auto ex = static_cast<double>(binarize(x, kBinarizeThreshold).edge_count());
  if (ex == 0.0) throw std::invalid_argument("estimate_k: input graph has no edges");
  const auto ey = static_cast<double>(binarize(y, kBinarizeThreshold).edge_count());
  return (ey - ex) / ex;
}

nlohmann::json to_json(const DistanceReport& r) {
  nlohmann::json bd = r.bhattacharyya;
  if (std::isinf(r.bhattacharyya)) bd = "Inf";
  return {{"js", r.js}, {"hellinger", r.hellinger}, {"bhattacharyya", bd}, {"wasserstein", r.wasserstein}};
}

nlohmann::json to_json(const PropertyMseReport& r) {
  return {{"density_mse", r.density_mse},
          {"average_degree_mse", r.average_degree_mse},
          {"reciprocity_mse", r.reciprocity_mse},
          {"degree_wasserstein", r.degree_wasserstein},
          {"pairs", r.pairs},
          {"reciprocity_excluded", r.reciprocity_excluded}};
}

}  // namespace gtgan
