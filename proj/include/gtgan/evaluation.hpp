#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtgan/graph.hpp"
#include "gtgan/metrics.hpp"
#include "gtgan/model.hpp"
#include "gtgan/synth.hpp"

namespace gtgan {

struct ClassifierReport {
  double precision = 0.0;
  double recall = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
  std::string variant;  // "generated_trained" or "real_trained"
};

/// One translated target per input; item i uses noise seeded by
/// derive_seed(seed, i). Outputs keep their raw weights.
std::vector<DirectedGraph> generate_targets(const ModelParams& translator,
                                            std::span<const DirectedGraph> inputs,
                                            std::uint64_t seed, unsigned threads = 1);

struct ClassifierConfig {
  std::size_t epochs = 30;
  std::size_t max_steps = 0;  // 0 = no cap
  std::size_t batch_size = 8;
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  /// Threshold graphs at 0.5 before the classifier sees them.
  bool binarize_inputs = true;
  unsigned threads = 1;
};

/// Single-channel critic trained with cross-entropy (positives labelled 1).
ModelParams binary_classifier_train(std::span<const DirectedGraph> positives,
                                    std::span<const DirectedGraph> negatives,
                                    const ArchSpec& arch, const ClassifierConfig& cfg);

/// Classifier probabilities, one per graph.
std::vector<double> classifier_scores(const ModelParams& classifier,
                                      std::span<const DirectedGraph> graphs,
                                      bool binarize_inputs, unsigned threads = 1);

/// Precision, recall and F1 at `threshold` (score >= threshold is positive);
/// AUC as the Mann-Whitney statistic with ties counted one half.
ClassifierReport classification_metrics(std::span<const double> scores,
                                        const std::vector<bool>& labels, double threshold = 0.5);

struct IndirectReport {
  ClassifierReport generated_trained;
  ClassifierReport real_trained;
  std::uint64_t seed = 0;
  std::size_t part1 = 0;
  std::size_t part2 = 0;
};

/// Splits the test pairs in half. Classifier A learns generated targets vs
/// inputs and classifier B real targets vs inputs on part 1; both are
/// scored on part 2 (real targets positive, inputs negative).
IndirectReport indirect_eval(const ModelParams& translator, const Dataset& test_set,
                             const ClassifierConfig& cfg, std::uint64_t seed);

/// Same protocol with the part-1 positives for classifier A supplied
/// directly; generated[i] corresponds to test pair i.
IndirectReport indirect_eval_graphs(const Dataset& test_set,
                                    std::span<const DirectedGraph> generated,
                                    const ClassifierConfig& cfg, std::uint64_t seed);

struct KStatistics {
  std::vector<double> generated;  // estimate_k(input, generated target) per pair
  std::vector<double> real;       // estimate_k(input, real target) per pair
  double generated_mean = 0.0;
  double real_mean = 0.0;
  std::size_t skipped = 0;  // pairs with an edgeless input
};

struct DirectReport {
  DistanceReport distances;
  PropertyMseReport properties;
  std::optional<KStatistics> k;
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
};

/// Generates targets for every test input and compares them with the real
/// targets. k statistics are added for Poisson datasets.
DirectReport direct_eval(const ModelParams& translator, const Dataset& test_set,
                         std::uint64_t seed, unsigned threads = 1);

/// Direct evaluation of already generated targets, index-aligned with the
/// test pairs.
DirectReport direct_eval_graphs(const Dataset& test_set, std::span<const DirectedGraph> generated);

nlohmann::json to_json(const ClassifierReport& r);
nlohmann::json to_json(const IndirectReport& r);
nlohmann::json to_json(const DirectReport& r);

}  // namespace gtgan
