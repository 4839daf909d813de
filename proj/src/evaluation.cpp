#include "gtgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gtgan/parallel.hpp"
#include "gtgan/rng.hpp"
#include "gtgan/trainer.hpp"

namespace gtgan {

namespace {

constexpr std::uint64_t kClassifierSalt = 0xc1a5;
constexpr std::uint64_t kSplitSalt = 0x5b17;
constexpr double kThreshold = 0.5;

FeatureTensor classifier_input(const DirectedGraph& g, bool binarize_inputs) {
  return FeatureTensor::from_graph(binarize_inputs ? binarize(g, kThreshold) : g);
}

std::vector<DirectedGraph> column(const Dataset& ds, std::span<const std::size_t> idx, bool inputs) {
  std::vector<DirectedGraph> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(inputs ? ds.pairs[i].input : ds.pairs[i].target);
  return out;
}

std::vector<std::size_t> test_indices(const Dataset& ds) {
  ds.validate();
  auto idx = ds.indices(Split::test);
  if (idx.empty()) throw std::invalid_argument("dataset has an empty test split");
  return idx;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<DirectedGraph> generate_targets(const ModelParams& translator,
                                            std::span<const DirectedGraph> inputs,
                                            std::uint64_t seed, unsigned threads) {
  const std::size_t n = translator.arch().n;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].n() != n) {
      throw std::invalid_argument("input " + std::to_string(i) + " has n=" + std::to_string(inputs[i].n()) +
                                  " but the translator expects n=" + std::to_string(n));
    }
  }
  std::vector<DirectedGraph> out(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    const auto noise = sample_noise(translator.arch(), derive_seed(seed, i));
    out[i] = translator_forward(translator, inputs[i], noise, false).graph();
  });
  return out;
}

ModelParams binary_classifier_train(std::span<const DirectedGraph> positives,
                                    std::span<const DirectedGraph> negatives,
                                    const ArchSpec& arch, const ClassifierConfig& cfg) {
  if (positives.empty() || negatives.empty()) throw std::invalid_argument("classifier needs both classes");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<FeatureTensor> xs;
  std::vector<double> ys;
  for (const auto& g : positives) {
    if (g.n() != arch.n) throw std::invalid_argument("positive graph does not match arch n");
    xs.push_back(classifier_input(g, cfg.binarize_inputs));
    ys.push_back(1.0);
  }
  for (const auto& g : negatives) {
    if (g.n() != arch.n) throw std::invalid_argument("negative graph does not match arch n");
    xs.push_back(classifier_input(g, cfg.binarize_inputs));
    ys.push_back(0.0);
  }

  ModelParams model = init_params(arch, Role::classifier, derive_seed(cfg.seed, 0, kClassifierSalt));
  AdamState adam = AdamState::zeros(model.param_count());
  const AdamHyper hyper{cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon};
  std::vector<std::size_t> order(xs.size());
  std::size_t step = 0;
  const bool capped = cfg.max_steps > 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (capped && step >= cfg.max_steps) break;
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, epoch + 1, kClassifierSalt));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (capped && step >= cfg.max_steps) break;
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const double inv = 1.0 / static_cast<double>(count);
      std::vector<ModelGrads> grads(count);
      std::vector<double> losses(count);
      parallel_for(count, cfg.threads, [&](std::size_t b) {
        const std::size_t i = order[start + b];
        const auto r = classifier_forward(model, xs[i], true);
        const double p = std::clamp(r.probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
        losses[b] = ys[i] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
        grads[b] = critic_backward(model, *r.cache, (r.probability - ys[i]) * inv).params;
      });
      ModelGrads total = ModelGrads::zeros_like(model);
      double loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        total.add(grads[b]);
        loss += losses[b];
      }
      ++step;
      if (!std::isfinite(loss)) throw NonFiniteError(step, "classifier loss");
      adam_step(model, total, adam, hyper);
    }
  }
  return model;
}

std::vector<double> classifier_scores(const ModelParams& classifier,
                                      std::span<const DirectedGraph> graphs,
                                      bool binarize_inputs, unsigned threads) {
  std::vector<double> scores(graphs.size());
  parallel_for(graphs.size(), threads, [&](std::size_t i) {
    scores[i] = classifier_forward(classifier, classifier_input(graphs[i], binarize_inputs), false).probability;
  });
  return scores;
}

ClassifierReport classification_metrics(std::span<const double> scores,
                                        const std::vector<bool>& labels, double threshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  std::size_t pos = 0;
  for (bool l : labels) pos += l ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("classification_metrics needs both labels present");

  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) (labels[i] ? tp : fp) += 1;
  }
  ClassifierReport r;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = static_cast<double>(tp) / static_cast<double>(pos);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;

  // Mann-Whitney U from midranks.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi < order.size() && scores[order[hi]] == scores[order[lo]]) ++hi;
    const double midrank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t k = lo; k < hi; ++k) {
      if (labels[order[k]]) positive_rank_sum += midrank;
    }
    lo = hi;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  r.auc = (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
  return r;
}

IndirectReport indirect_eval_graphs(const Dataset& test_set,
                                    std::span<const DirectedGraph> generated,
                                    const ClassifierConfig& cfg, std::uint64_t seed) {
  auto idx = test_indices(test_set);
  if (idx.size() < 2) throw std::invalid_argument("indirect evaluation needs at least 2 test pairs");
  if (generated.size() != idx.size()) {
    throw std::invalid_argument("expected " + std::to_string(idx.size()) + " generated targets, got " +
                                std::to_string(generated.size()));
  }
  std::vector<std::size_t> slot(idx.size());
  std::iota(slot.begin(), slot.end(), 0);
  Rng rng(derive_seed(seed, 0, kSplitSalt));
  std::shuffle(slot.begin(), slot.end(), rng);
  const std::size_t half = slot.size() / 2;

  std::vector<std::size_t> part1, part2;
  std::vector<DirectedGraph> generated1;
  for (std::size_t s = 0; s < slot.size(); ++s) {
    if (s < half) {
      part1.push_back(idx[slot[s]]);
      generated1.push_back(generated[slot[s]]);
    } else {
      part2.push_back(idx[slot[s]]);
    }
  }
  const auto inputs1 = column(test_set, part1, true);
  const auto real1 = column(test_set, part1, false);

  ArchSpec arch;
  arch.n = test_set.n;
  ClassifierConfig c = cfg;
  c.seed = derive_seed(seed, 1, kSplitSalt);
  const ModelParams a = binary_classifier_train(generated1, inputs1, arch, c);
  const ModelParams b = binary_classifier_train(real1, inputs1, arch, c);

  std::vector<DirectedGraph> eval_graphs = column(test_set, part2, false);
  const auto inputs2 = column(test_set, part2, true);
  eval_graphs.insert(eval_graphs.end(), inputs2.begin(), inputs2.end());
  std::vector<bool> labels(eval_graphs.size(), false);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(part2.size()), true);

  IndirectReport rep;
  rep.seed = seed;
  rep.part1 = part1.size();
  rep.part2 = part2.size();
  rep.generated_trained = classification_metrics(
      classifier_scores(a, eval_graphs, cfg.binarize_inputs, cfg.threads), labels);
  rep.generated_trained.variant = "generated_trained";
  rep.real_trained = classification_metrics(
      classifier_scores(b, eval_graphs, cfg.binarize_inputs, cfg.threads), labels);
  rep.real_trained.variant = "real_trained";
  return rep;
}

IndirectReport indirect_eval(const ModelParams& translator, const Dataset& test_set,
                             const ClassifierConfig& cfg, std::uint64_t seed) {
  const auto idx = test_indices(test_set);
  const auto inputs = column(test_set, idx, true);
  const auto generated = generate_targets(translator, inputs, derive_seed(seed, 2, kSplitSalt), cfg.threads);
  return indirect_eval_graphs(test_set, generated, cfg, seed);
}

DirectReport direct_eval_graphs(const Dataset& test_set, std::span<const DirectedGraph> generated) {
  const auto idx = test_indices(test_set);
  if (generated.size() != idx.size()) {
    throw std::invalid_argument("expected " + std::to_string(idx.size()) + " generated targets, got " +
                                std::to_string(generated.size()));
  }
  const auto real = column(test_set, idx, false);
  DirectReport rep;
  rep.pairs = idx.size();
  rep.distances = degree_distance_report(generated, real);
  rep.properties = property_mse_report(generated, real);
  if (test_set.kind == DatasetKind::poisson) {
    KStatistics k;
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const auto& input = test_set.pairs[idx[s]].input;
      if (binarize(input, kThreshold).edge_count() == 0) {
        ++k.skipped;
        continue;
      }
      k.generated.push_back(estimate_k(input, generated[s]));
      k.real.push_back(estimate_k(input, real[s]));
    }
    k.generated_mean = mean_of(k.generated);
    k.real_mean = mean_of(k.real);
    rep.k = std::move(k);
  }
  return rep;
}

DirectReport direct_eval(const ModelParams& translator, const Dataset& test_set,
                         std::uint64_t seed, unsigned threads) {
  const auto idx = test_indices(test_set);
  const auto generated = generate_targets(translator, column(test_set, idx, true), seed, threads);
  DirectReport rep = direct_eval_graphs(test_set, generated);
  rep.seed = seed;
  return rep;
}

nlohmann::json to_json(const ClassifierReport& r) {
  return {{"variant", r.variant}, {"precision", r.precision}, {"recall", r.recall},
          {"auc", r.auc}, {"f1", r.f1}};
}

nlohmann::json to_json(const IndirectReport& r) {
  return {{"seed", r.seed},
          {"part1_pairs", r.part1},
          {"part2_pairs", r.part2},
          {"generated_trained", to_json(r.generated_trained)},
          {"real_trained", to_json(r.real_trained)}};
}

nlohmann::json to_json(const DirectReport& r) {
  nlohmann::json j = {{"seed", r.seed},
                      {"pairs", r.pairs},
                      {"degree_distances", to_json(r.distances)},
                      {"properties", to_json(r.properties)}};
  if (r.k) {
    j["k"] = {{"generated", r.k->generated},
              {"real", r.k->real},
              {"generated_mean", r.k->generated_mean},
              {"real_mean", r.k->real_mean},
              {"skipped", r.k->skipped}};
  }
  return j;
}

}  // namespace gtgan
