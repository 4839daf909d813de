#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gtgan/evaluation.hpp"
#include "gtgan/trainer.hpp"
#include "support.hpp"

using namespace gtgan;
using namespace testing_support;

namespace {

// Fraction of (positive, negative) pairs ranked correctly, ties half.
double auc_oracle(const std::vector<double>& s, const std::vector<bool>& y) {
  double good = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        total += 1;
        good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return good / total;
}

ArchSpec arch_for(std::size_t n) {
  ArchSpec a;
  a.n = n;
  a.output_activation = Activation::sigmoid;
  return a;
}

Dataset all_test(Dataset ds) {
  for (auto& s : ds.split) s = Split::test;
  return ds;
}

}  // namespace

TEST_CASE("classification metric examples") {
  const auto r = classification_metrics(std::vector<double>{0.9, 0.8, 0.3}, {true, false, true});
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.auc == 0.5);
  CHECK(r.f1 == doctest::Approx(0.5));

  const auto ties = classification_metrics(std::vector<double>{0.4, 0.4, 0.4, 0.4}, {true, false, true, false});
  CHECK(ties.auc == 0.5);
  CHECK(ties.precision == 0.0);  // nothing predicted positive
  CHECK(ties.f1 == 0.0);

  const auto exact = classification_metrics(std::vector<double>{0.5, 0.49}, {true, false});
  CHECK(exact.precision == 1.0);  // 0.5 itself counts as positive
  CHECK(exact.auc == 1.0);

  CHECK_THROWS_AS(classification_metrics(std::vector<double>{0.1}, {true, false}), std::invalid_argument);
  CHECK_THROWS_AS(classification_metrics(std::vector<double>{0.1, 0.2}, {true, true}), std::invalid_argument);
}

TEST_CASE("auc properties") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + trial % 15;
    std::vector<double> s = random_values(m, rng, 0.0, 1.0);
    for (auto& v : s) v = std::round(v * 8) / 8;  // force ties
    std::vector<bool> y(m);
    for (std::size_t k = 0; k < m; ++k) y[k] = rng() % 2;
    y[0] = true;
    y[1] = false;
    const auto r = classification_metrics(s, y);
    CHECK(r.auc == doctest::Approx(auc_oracle(s, y)).epsilon(1e-12));

    std::vector<double> warped(m);
    for (std::size_t k = 0; k < m; ++k) warped[k] = std::exp(3 * s[k]) - 7;
    CHECK(classification_metrics(warped, y, std::exp(1.5) - 7).auc == doctest::Approx(r.auc).epsilon(1e-12));

    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const bool pred = s[k] >= 0.5;
      tp += pred && y[k];
      fp += pred && !y[k];
      fn += !pred && y[k];
    }
    const double precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double recall = double(tp) / double(tp + fn);
    CHECK(r.precision == doctest::Approx(precision));
    CHECK(r.recall == doctest::Approx(recall));
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    CHECK(r.f1 == doctest::Approx(f1));
  }
}

TEST_CASE("generate_targets") {
  const auto ds = make_dataset(DatasetKind::poisson, 6, 6, 0.5, 3);
  const auto t = init_params(arch_for(6), Role::translator, 4);
  std::vector<DirectedGraph> inputs;
  for (const auto& p : ds.pairs) inputs.push_back(p.input);
  const auto a = generate_targets(t, inputs, 9);
  CHECK(a.size() == 6);
  CHECK(a == generate_targets(t, inputs, 9));
  CHECK(a == generate_targets(t, inputs, 9, 3));
  CHECK_FALSE(a == generate_targets(t, inputs, 10));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto single = translator_forward(t, inputs[i], sample_noise(t.arch(), derive_seed(9, i)), false);
    CHECK(single.graph() == a[i]);
  }
  CHECK(generate_targets(t, std::vector<DirectedGraph>{}, 1).empty());
}

TEST_CASE("classifier separates dense from empty graphs") {
  Rng rng(5);
  std::vector<DirectedGraph> dense, sparse;
  for (int k = 0; k < 16; ++k) {
    dense.push_back(random_graph(6, 0.8, rng));
    sparse.push_back(random_graph(6, 0.05, rng));
  }
  ClassifierConfig cfg;
  cfg.epochs = 200;
  cfg.max_steps = 200;
  cfg.seed = 3;
  const auto c = binary_classifier_train(dense, sparse, arch_for(6), cfg);
  CHECK(c == binary_classifier_train(dense, sparse, arch_for(6), cfg));
  const auto pos = classifier_scores(c, dense, true);
  const auto neg = classifier_scores(c, sparse, true);
  std::size_t correct = 0;
  for (double p : pos) correct += p >= 0.5;
  for (double p : neg) correct += p < 0.5;
  CHECK(correct == 32);
  CHECK_THROWS_AS(binary_classifier_train({}, sparse, arch_for(6), cfg), std::invalid_argument);
}

TEST_CASE("direct evaluation on ground truth") {
  const auto ds = all_test(make_dataset(DatasetKind::poisson, 20, 60, 0.5, 6));
  std::vector<DirectedGraph> real;
  for (const auto& p : ds.pairs) real.push_back(p.target);
  const auto r = direct_eval_graphs(ds, real);
  CHECK(r.distances.js == 0.0);
  CHECK(r.distances.wasserstein == 0.0);
  CHECK(r.properties.density_mse == 0.0);
  CHECK(r.pairs == 60);
  REQUIRE(r.k.has_value());
  CHECK(r.k->generated == r.k->real);
  // k ~ Poisson(5) with a little capping; 60 draws have standard error ~0.3
  CHECK(std::abs(r.k->real_mean - 5.0) < 1.0);

  const auto j = to_json(r);
  CHECK(j.contains("degree_distances"));
  CHECK(j.contains("k"));

  const auto t = init_params(arch_for(20), Role::translator, 1);
  const auto untrained = direct_eval(t, ds, 2);
  CHECK(untrained.pairs == 60);
  CHECK(untrained.distances.wasserstein > 0.0);

  auto no_test = ds;
  for (auto& s : no_test.split) s = Split::train;
  CHECK_THROWS_AS(direct_eval_graphs(no_test, real), std::invalid_argument);
  CHECK_THROWS_AS(direct_eval_graphs(ds, std::vector<DirectedGraph>(3, DirectedGraph(20))), std::invalid_argument);

  auto sf = all_test(make_dataset(DatasetKind::scale_free, 10, 6, 0.5, 1));
  std::vector<DirectedGraph> sf_real;
  for (const auto& p : sf.pairs) sf_real.push_back(p.target);
  CHECK_FALSE(direct_eval_graphs(sf, sf_real).k.has_value());
}

TEST_CASE("indirect evaluation") {
  const auto ds = all_test(make_dataset(DatasetKind::poisson, 10, 40, 0.5, 7));
  std::vector<DirectedGraph> real, copies;
  for (const auto& p : ds.pairs) {
    real.push_back(p.target);
    copies.push_back(p.input);
  }
  ClassifierConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 2;

  // a translator that copies its input teaches classifier A nothing; any one
  // run ranks by its random initialisation, so chance level holds on average
  double mean_auc = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    ClassifierConfig c = cfg;
    c.seed = s;
    const auto copy = indirect_eval_graphs(ds, copies, c, s);
    CHECK(copy.part1 == 20);
    CHECK(copy.part2 == 20);
    CHECK(copy.generated_trained.variant == "generated_trained");
    CHECK(copy.real_trained.variant == "real_trained");
    mean_auc += copy.generated_trained.auc / 10;
  }
  CHECK(std::abs(mean_auc - 0.5) <= 0.15);

  // real targets in place of generated ones make both classifiers alike
  const auto perfect = indirect_eval_graphs(ds, real, cfg, 4);
  CHECK(perfect.real_trained.auc >= 0.9);
  CHECK(perfect.generated_trained.auc == perfect.real_trained.auc);

  const auto j = to_json(perfect);
  CHECK(j.contains("generated_trained"));
  CHECK(j["real_trained"].contains("auc"));
}
