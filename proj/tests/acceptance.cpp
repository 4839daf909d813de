// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "gtgan/auth_log.hpp"
#include "gtgan/cli.hpp"
#include "gtgan/evaluation.hpp"
#include "gtgan/layers.hpp"
#include "gtgan/metrics.hpp"
#include "gtgan/rng.hpp"
#include "gtgan/serialization.hpp"
#include "gtgan/trainer.hpp"

using namespace gtgan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> uniform(std::size_t count, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(count);
  for (double& x : v) x = u(rng);
  return v;
}

ArchSpec synthetic_arch(std::size_t n) {
  ArchSpec a;
  a.n = n;
  a.output_activation = Activation::sigmoid;
  return a;
}

std::vector<DirectedGraph> inputs_of(const Dataset& ds, Split split) {
  std::vector<DirectedGraph> v;
  for (std::size_t i : ds.indices(split)) v.push_back(ds.pairs[i].input);
  return v;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_at;
  for (LayerKind kind : {LayerKind::e2e_conv, LayerKind::e2n_conv, LayerKind::n2e_deconv, LayerKind::e2e_deconv,
                         LayerKind::node_to_graph, LayerKind::dense}) {
    for (Activation act : {Activation::linear, Activation::relu}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GradCheckOptions opts;
        opts.activation = act;
        const auto r = grad_check(kind, 8, 3, 2, derive_seed(seed, 0, static_cast<std::uint64_t>(kind)), opts);
        if (r.max_rel_error > worst) {
          worst = r.max_rel_error;
          worst_at = std::string(to_string(kind)) + "/" + std::string(to_string(act));
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 60.0,
          "max rel error " + fmt(worst) + " (" + worst_at + "), 240 checks in " + fmt(t, 3) + " s"};
}

Outcome adjointness_suite() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 11, in = 1 + trial % 4, out = 1 + (trial / 4) % 4;
    LayerKernels k = LayerKernels::zeros(in, out, n, Activation::linear);
    k.phi = uniform(k.phi.size(), rng);
    k.psi = uniform(k.psi.size(), rng);
    const auto kt = k.transposed();
    FeatureTensor x(n, in), y_edges(n, out);
    NodeTensor y_nodes(n, out);
    x.data() = uniform(x.data().size(), rng);
    y_edges.data() = uniform(y_edges.data().size(), rng);
    y_nodes.data() = uniform(y_nodes.data().size(), rng);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
    worst = std::max(worst, rel(inner(e2n_conv_forward(x, k).data(), y_nodes.data()),
                                inner(x.data(), n2e_deconv_forward(y_nodes, kt).data())));
    worst = std::max(worst, rel(inner(e2e_conv_forward(x, k).data(), y_edges.data()),
                                inner(x.data(), e2e_deconv_forward(y_edges, kt).data())));
  }
  return {worst <= 1e-9, "max relative gap " + fmt(worst) + " over 100 cases per pair"};
}

Outcome architecture_fidelity() {
  const auto arch = synthetic_arch(50);
  const auto t = init_params(arch, Role::translator, 1);
  const auto d = init_params(arch, Role::discriminator, 2);
  const DirectedGraph g(50);
  const auto tr = translator_forward(t, g, sample_noise(arch, 3), true);
  const auto dr = discriminator_forward(d, g, g, true);
  auto trace = [](const auto& c) {
    std::vector<std::string> v;
    for (const auto& s : shape_trace(c)) v.push_back(to_string(s));
    return v;
  };
  const std::vector<std::string> want_t{"50x50x1", "50x50x5", "50x50x10", "50x1x10",
                                        "50x50x10", "50x50x5", "50x50x1"};
  const std::vector<std::string> want_d{"50x50x1", "50x50x5", "50x50x10", "50x1x10", "1x1x10"};
  bool ok = trace(*tr.cache) == want_t && trace(*dr.cache) == want_d;
  for (const auto* p : {&t, &d}) ok = ok && p->param_count() == p->flatten().size();
  ok = ok && t.param_count() == param_count(arch, Role::translator);
  return {ok, "translator params " + std::to_string(t.param_count()) + ", discriminator params " +
                  std::to_string(d.param_count())};
}

Outcome overfit() {
  const auto t0 = Clock::now();
  Dataset ds;
  ds.kind = DatasetKind::poisson;
  ds.n = 20;
  for (std::uint64_t s = 0; s < 10; ++s) {
    ds.pairs.push_back(gen_poisson_pair(20, 5.0, derive_seed(77, s)));
    ds.split.push_back(Split::train);
  }
  TrainConfig cfg;
  cfg.epochs = 100000;
  cfg.max_generator_steps = 2000;
  cfg.seed = 4;
  const auto r = train(ds, synthetic_arch(20), cfg);
  const auto generated = generate_targets(r.translator, inputs_of(ds, Split::train), 5);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const auto g = binarize(generated[i], 0.5);
    const auto& y = ds.pairs[i].target;
    for (std::size_t a = 0; a < 20; ++a)
      for (std::size_t b = 0; b < 20; ++b) {
        const bool pg = g.has_edge(a, b), py = y.has_edge(a, b);
        tp += pg && py;
        fp += pg && !py;
        fn += !pg && py;
      }
  }
  const double precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  const double recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  const double t = seconds_since(t0);
  return {f1 > 0.9 && t < 300.0, "edge F1 " + fmt(f1) + " (P " + fmt(precision) + ", R " + fmt(recall) +
                                     ") after " + std::to_string(r.history.steps.size()) + " steps, " + fmt(t, 3) +
                                     " s"};
}

Outcome generator_statistics() {
  double k_sum = 0.0;
  for (std::uint64_t s = 0; s < 2000; ++s)
    k_sum += gen_poisson_pair(30, 5.0, derive_seed(5, s)).meta.at("k").get<double>();
  const double k_mean = k_sum / 2000;

  std::map<std::size_t, std::size_t> counts;
  std::size_t nodes = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    for (std::size_t d : in_degrees(gen_scale_free_pair(50, 0.54, derive_seed(6, s)).input)) {
      ++counts[d];
      ++nodes;
    }
  }
  std::vector<double> lx, ly;
  for (const auto& [degree, c] : counts) {
    if (degree == 0) continue;
    lx.push_back(std::log(static_cast<double>(degree)));
    ly.push_back(std::log(static_cast<double>(c) / static_cast<double>(nodes)));
  }
  const double slope = least_squares_slope(lx, ly);
  return {std::abs(k_mean - 5.0) <= 0.3 && slope < -1.0,
          "mean k " + fmt(k_mean) + ", in-degree log-log slope " + fmt(slope)};
}

// Shared by the k-recovery and indirect criteria: 200 train and 200 test
// Poisson pairs at n=30 with the default training schedule.
struct PoissonRun {
  Dataset ds;
  TrainResult trained;
};

const PoissonRun& poisson_run() {
  static const PoissonRun run = [] {
    PoissonRun r{make_dataset(DatasetKind::poisson, 30, 400, 0.5, 31), {}};
    TrainConfig cfg;
    cfg.seed = 32;
    r.trained = train(r.ds, synthetic_arch(30), cfg);
    return r;
  }();
  return run;
}

Outcome k_recovery() {
  const auto& run = poisson_run();
  const auto trained = direct_eval(run.trained.translator, run.ds, 33);
  ArchSpec arch = synthetic_arch(30);
  arch.noise_dim = TrainConfig{}.noise_dim;
  const auto untrained = direct_eval(init_params(arch, Role::translator, translator_init_seed(32)), run.ds, 33);
  const double kt = trained.k->generated_mean, ku = untrained.k->generated_mean;
  const bool in_band = kt >= 2.0 && kt <= 8.0;
  const bool untrained_out = !(ku >= 2.0 && ku <= 8.0);
  return {in_band && untrained_out, "mean k trained " + fmt(kt) + ", untrained " + fmt(ku) + ", real " +
                                        fmt(trained.k->real_mean) + " over " + std::to_string(trained.pairs) +
                                        " test pairs"};
}

Outcome direct_ordering() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto ds = make_dataset(DatasetKind::scale_free, 30, 400, 0.5, derive_seed(70, seed));
    TrainConfig cfg;
    cfg.seed = seed;
    const auto r = train(ds, synthetic_arch(30), cfg);
    ArchSpec arch = synthetic_arch(30);
    arch.noise_dim = cfg.noise_dim;
    const auto untrained = init_params(arch, Role::translator, translator_init_seed(seed));
    const double wt = direct_eval(r.translator, ds, seed).distances.wasserstein;
    const double wu = direct_eval(untrained, ds, seed).distances.wasserstein;
    ok = ok && wt < wu;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + " WD " + fmt(wt) +
              " vs untrained " + fmt(wu);
  }
  return {ok, detail};
}

Outcome indirect() {
  const auto& run = poisson_run();
  ClassifierConfig cfg;
  const auto r = indirect_eval(run.trained.translator, run.ds, cfg, 34);
  const auto& a = r.generated_trained;
  const auto& b = r.real_trained;
  const bool ok = a.auc >= 0.8 && b.auc >= 0.9 && std::abs(a.f1 - b.f1) <= 0.15;
  return {ok, "A auc " + fmt(a.auc) + " f1 " + fmt(a.f1) + ", B auc " + fmt(b.auc) + " f1 " + fmt(b.f1)};
}

Outcome complexity() {
  std::vector<double> lx, ly;
  std::string detail;
  for (std::size_t n : {16, 32, 64, 128}) {
    const auto arch = synthetic_arch(n);
    const auto t = init_params(arch, Role::translator, 1);
    Rng rng(n);
    FeatureTensor x(n, 1);
    x.data() = uniform(n * n, rng);
    const auto noise = sample_noise(arch, 2);
    FeatureTensor upstream(n, 1);
    upstream.data() = uniform(n * n, rng);
    const int reps = n >= 128 ? 5 : 9;
    std::vector<double> times;
    for (int k = 0; k < reps; ++k) {
      const auto t0 = Clock::now();
      const auto r = translator_forward(t, x, noise, true);
      const auto g = translator_backward(t, *r.cache, upstream);
      times.push_back(seconds_since(t0));
      if (g.layers.empty()) std::abort();
    }
    std::nth_element(times.begin(), times.begin() + reps / 2, times.end());
    const double median = times[reps / 2];
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(median));
    detail += "N=" + std::to_string(n) + " " + fmt(median * 1e3, 3) + " ms; ";
  }
  const double slope = least_squares_slope(lx, ly);
  return {slope >= 1.5 && slope <= 2.5, detail + "slope " + fmt(slope)};
}

Outcome metric_oracles() {
  using V = std::vector<double>;
  double worst = 0.0;
  auto gap = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  const V p{0.2, 0.5, 0.3};
  gap(js_distance(p, p), 0.0);
  gap(hellinger(p, p), 0.0);
  gap(bhattacharyya(p, p), 0.0);
  gap(js_distance(V{1, 0}, V{0, 1}), 1.0);
  gap(hellinger(V{1, 0}, V{0, 1}), 1.0);
  const bool inf = std::isinf(bhattacharyya(V{1, 0}, V{0, 1}));
  gap(js_distance(V{1, 0}, V{0.5, 0.5}), std::sqrt(1.5 - 0.75 * std::log2(3.0)));
  const double bc = std::sqrt(0.45) + std::sqrt(0.05);
  gap(hellinger(V{0.5, 0.5}, V{0.9, 0.1}), std::sqrt(1 - bc));
  gap(bhattacharyya(V{0.5, 0.5}, V{0.9, 0.1}), -std::log(bc));
  gap(wasserstein1({{0, 3}, {1, 0}, {0, 1}}), 3.0);
  gap(wasserstein1({{0, 1}, {0.5, 0.5}, {0, 1}}), 0.5);
  gap(wasserstein1({{0, 1, 2}, p, p}), 0.0);

  std::vector<Edge> all;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) all.push_back({i, j, 1.0});
  const std::vector<DirectedGraph> empty{DirectedGraph(4)}, full{DirectedGraph::from_edges(4, all)};
  const auto report = degree_distance_report(empty, full);
  gap(report.wasserstein, 6.0);
  const bool json_inf = to_json(report).at("bhattacharyya") == "Inf";
  return {worst <= 1e-9 && inf && json_inf, "max deviation " + fmt(worst) + ", BD Inf in reports: " +
                                                (json_inf ? "yes" : "no")};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("gtgan_accept_" + std::to_string(::getpid()));
  auto pipeline = [&]() {
    fs::remove_all(root);
    const std::string data = (root / "data").string(), run = (root / "run").string();
    const std::string jsonl = data + "/dataset.jsonl", ckpt = run + "/translator.json";
    const std::vector<std::vector<std::string>> steps{
        {"gen-data", "--kind", "poisson", "--n", "12", "--count", "24", "--seed", "8", "--out", data},
        {"train", "--data", jsonl, "--out", run, "--steps", "20", "--seed", "9", "--checkpoint-every", "10"},
        {"translate", "--checkpoint", ckpt, "--data", jsonl, "--out", (root / "generated.jsonl").string()},
        {"eval-direct", "--checkpoint", ckpt, "--data", jsonl, "--out", (root / "direct.json").string()},
        {"eval-indirect", "--checkpoint", ckpt, "--data", jsonl, "--out", (root / "indirect.json").string(),
         "--clf-steps", "20"}};
    std::ostringstream sink;
    for (const auto& args : steps)
      if (cli::run(cli::parse_args(args), sink, sink) != 0) throw std::runtime_error("pipeline step failed: " + args[0]);
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
  };
  const auto first = pipeline();
  const auto second = pipeline();
  fs::remove_all(root);
  return {first == second && first.size() >= 9,
          std::to_string(first.size()) + " files compared, " + (first == second ? "identical" : "different")};
}

Outcome ingestion() {
  std::ifstream in(std::string(GTGAN_FIXTURES) + "/auth_small.csv");
  if (!in) throw std::runtime_error("auth fixture missing");
  const auto events = parse_auth_log(in);
  std::size_t red = 0;
  for (const auto& e : events) red += e.red_team;
  const auto windows = build_user_graphs(events, 100);
  bool nested = true;
  double normal = 0.0, complete = 0.0;
  for (const auto& w : windows) {
    for (double v : w.normal.weights()) normal += v;
    const auto& whole = w.malicious ? *w.malicious : w.normal;
    for (double v : whole.weights()) complete += v;
    if (w.malicious)
      for (std::size_t k = 0; k < w.normal.weights().size(); ++k)
        nested = nested && w.normal.weights()[k] <= w.malicious->weights()[k];
  }
  const bool conserved = normal == double(events.size() - red) && complete == double(events.size());
  const auto ds = auth_dataset(windows, 5);
  std::stringstream buf;
  write_dataset(ds, buf);
  const bool round_trip = read_dataset(buf) == ds;
  return {nested && conserved && round_trip && !ds.pairs.empty(),
          std::to_string(events.size()) + " events, " + std::to_string(windows.size()) + " windows, " +
              std::to_string(ds.pairs.size()) + " pairs; nested " + (nested ? "yes" : "no") + ", conserved " +
              (conserved ? "yes" : "no") + ", round-trip " + (round_trip ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 gradient suite", gradient_suite},
      {"AC2 adjointness", adjointness_suite},
      {"AC3 architecture fidelity", architecture_fidelity},
      {"AC4 overfit", overfit},
      {"AC5 generator statistics", generator_statistics},
      {"AC6 k-recovery", k_recovery},
      {"AC7 direct-evaluation ordering", direct_ordering},
      {"AC8 indirect evaluation", indirect},
      {"AC9 complexity", complexity},
      {"AC10 metric oracles", metric_oracles},
      {"AC11 determinism", determinism},
      {"AC12 ingestion", ingestion},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(seconds_since(t0), 3)
              << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
