#include "gtgan/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gtgan/auth_log.hpp"
#include "gtgan/layers.hpp"
#include "gtgan/metrics.hpp"
#include "gtgan/rng.hpp"
#include "gtgan/serialization.hpp"

namespace gtgan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
  const char* env = std::getenv("GTGAN_LOG");
  if (env == nullptr) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::quiet;
  if (v == "debug" || v == "2") return LogLevel::debug;
  return LogLevel::info;
}

// CLI11 validator backed by one of our enum parsers.
template <class Parse>
CLI::Validator parsed_by(Parse parse, std::string name) {
  return CLI::Validator(
      [parse](std::string& value) -> std::string {
        try {
          parse(value);
          return {};
        } catch (const std::exception& e) {
          return e.what();
        }
      },
      "", std::move(name));
}

Split parse_split_or_all(const std::string& s) {
  if (s == "all") return Split::train;
  return parse_split(s);
}

std::string to_fixed(double v, int digits = 6) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

void check_not_directory(const std::string& path, const char* flag) {
  if (!path.empty() && fs::is_directory(path)) {
    throw std::invalid_argument(std::string(flag) + " must name a file, got directory " + path);
  }
}

bool binary_kind(DatasetKind kind) { return kind != DatasetKind::auth; }

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void check_translator(const ModelParams& t, const Dataset& ds, const std::string& path) {
  if (t.role() != Role::translator) {
    throw std::invalid_argument(path + " holds a " + std::string(to_string(t.role())) + ", not a translator");
  }
  if (t.arch().n != ds.n) {
    throw std::invalid_argument("checkpoint n=" + std::to_string(t.arch().n) + " does not match dataset n=" +
                                std::to_string(ds.n));
  }
}

int run_gen_data(const GenData& c, std::ostream& out) {
  DatasetOptions opts;
  opts.beta = c.beta;
  opts.lambda = c.lambda;
  const Dataset ds = make_dataset(c.kind, c.n, c.count, c.train_fraction, c.seed, opts);
  const fs::path path = fs::path(c.out) / "dataset.jsonl";
  write_dataset(ds, path);
  out << "gen-data: wrote " << ds.pairs.size() << " " << to_string(c.kind) << " pairs (n=" << c.n
      << ", train=" << ds.indices(Split::train).size() << ", seed=" << c.seed << ") to " << path.string() << "\n";
  return 0;
}

int run_ingest_auth(const IngestAuth& c, std::ostream& out, std::ostream& err) {
  std::ifstream in(c.log);
  if (!in) throw std::runtime_error("cannot open auth log " + c.log);
  const auto events = parse_auth_log(in);
  const auto windows = build_user_graphs(events, c.window);
  std::size_t skipped = 0;
  Dataset ds = auth_dataset(windows, c.n, &skipped);
  if (ds.pairs.size() >= 2) split_by_group(ds, "user", c.train_fraction, c.seed);
  if (skipped > 0 && log_level() != LogLevel::quiet) {
    err << "ingest-auth: skipped " << skipped << " windows touching more than " << c.n << " computers\n";
  }
  const fs::path path = fs::path(c.out) / "dataset.jsonl";
  write_dataset(ds, path);
  out << "ingest-auth: " << events.size() << " events, " << windows.size() << " windows, " << ds.pairs.size()
      << " pairs (n=" << c.n << ", seed=" << c.seed << ") to " << path.string() << "\n";
  return 0;
}

int run_train(const Train& c, std::ostream& out, std::ostream& err) {
  const Dataset ds = read_dataset(fs::path(c.data));
  if (ds.pairs.empty()) throw std::invalid_argument(c.data + " holds no pairs");
  ArchSpec arch;
  arch.n = ds.n;
  arch.noise_dim = c.config.noise_dim;
  arch.skip = parse_skip_mode(c.skip);
  if (c.output_activation == "auto") {
    arch.output_activation = binary_kind(ds.kind) ? Activation::sigmoid : Activation::relu;
  } else {
    arch.output_activation = parse_activation(c.output_activation);
  }
  arch.validate();

  const fs::path dir(c.out);
  const bool debug = log_level() == LogLevel::debug;
  TrainConfig cfg = c.config;
  CheckpointCallback on_checkpoint = [&](std::size_t step, const ModelParams& t, const ModelParams& d) {
    const std::string tag = "step_" + std::to_string(step);
    save_checkpoint(t, dir / "checkpoints" / (tag + "_translator.json"));
    save_checkpoint(d, dir / "checkpoints" / (tag + "_discriminator.json"));
    if (debug) err << "train: checkpoint at step " << step << "\n";
  };
  const TrainResult r = train(ds, arch, cfg, on_checkpoint);

  save_checkpoint(r.translator, dir / "translator.json");
  save_checkpoint(r.discriminator, dir / "discriminator.json");
  write_file_atomic(dir / "history.csv", r.history.to_csv());
  if (debug) {
    for (const auto& s : r.history.steps) {
      err << "step " << s.step << " loss_d " << s.loss_d << " loss_g " << s.loss_g << "\n";
    }
  }
  out << "train: " << r.history.steps.size() << " generator steps on " << ds.indices(Split::train).size()
      << " pairs (n=" << ds.n << ", seed=" << cfg.seed << ")";
  if (!r.history.steps.empty()) {
    const auto& last = r.history.steps.back();
    out << ", final loss_d=" << to_fixed(last.loss_d, 4) << " loss_g=" << to_fixed(last.loss_g, 4);
  }
  out << ", wrote " << dir.string() << "\n";
  return 0;
}

int run_translate(const Translate& c, std::ostream& out) {
  const Dataset ds = read_dataset(fs::path(c.data));
  const ModelParams t = load_checkpoint(c.checkpoint);
  check_translator(t, ds, c.checkpoint);
  std::vector<std::size_t> idx;
  if (c.split == "all") {
    idx.resize(ds.pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  } else {
    idx = ds.indices(parse_split(c.split));
  }
  std::vector<DirectedGraph> inputs;
  for (std::size_t i : idx) inputs.push_back(ds.pairs[i].input);
  const auto generated = generate_targets(t, inputs, c.seed, c.threads);
  Dataset result;
  result.kind = ds.kind;
  result.n = ds.n;
  for (std::size_t s = 0; s < idx.size(); ++s) {
    GraphPair pair = ds.pairs[idx[s]];
    pair.target = generated[s];
    pair.meta["source_index"] = idx[s];
    pair.meta["translate_seed"] = c.seed;
    result.pairs.push_back(std::move(pair));
    result.split.push_back(ds.split[idx[s]]);
  }
  write_dataset(result, fs::path(c.out));
  out << "translate: generated " << generated.size() << " targets (split=" << c.split << ", seed=" << c.seed
      << ") to " << c.out << "\n";
  return 0;
}

json report_header(const std::string& command, const std::string& checkpoint, const std::string& data,
                   std::uint64_t seed) {
  return {{"command", command}, {"checkpoint", checkpoint}, {"data", data}, {"seed", seed}};
}

int run_eval_direct(const EvalDirect& c, std::ostream& out) {
  const Dataset ds = read_dataset(fs::path(c.data));
  const ModelParams t = load_checkpoint(c.checkpoint);
  check_translator(t, ds, c.checkpoint);
  const DirectReport r = direct_eval(t, ds, c.seed, c.threads);
  json report = report_header("eval-direct", c.checkpoint, c.data, c.seed);
  report["direct"] = to_json(r);
  write_json(c.out, report);
  out << "eval-direct: " << r.pairs << " pairs, degree WD=" << to_fixed(r.distances.wasserstein)
      << " JS=" << to_fixed(r.distances.js);
  if (r.k) out << ", mean k=" << to_fixed(r.k->generated_mean, 3) << " (real " << to_fixed(r.k->real_mean, 3) << ")";
  out << ", seed=" << c.seed << ", wrote " << c.out << "\n";
  return 0;
}

int run_eval_indirect(const EvalIndirect& c, std::ostream& out) {
  const Dataset ds = read_dataset(fs::path(c.data));
  const ModelParams t = load_checkpoint(c.checkpoint);
  check_translator(t, ds, c.checkpoint);
  ClassifierConfig cfg = c.classifier;
  cfg.binarize_inputs = c.binarize == "auto" ? binary_kind(ds.kind) : c.binarize == "yes";
  const IndirectReport r = indirect_eval(t, ds, cfg, c.seed);
  json report = report_header("eval-indirect", c.checkpoint, c.data, c.seed);
  report["classifier"] = {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}, {"lr", cfg.lr},
                          {"binarize_inputs", cfg.binarize_inputs}};
  report["indirect"] = to_json(r);
  write_json(c.out, report);
  out << "eval-indirect: A auc=" << to_fixed(r.generated_trained.auc, 4) << " f1=" << to_fixed(r.generated_trained.f1, 4)
      << ", B auc=" << to_fixed(r.real_trained.auc, 4) << " f1=" << to_fixed(r.real_trained.f1, 4)
      << ", seed=" << c.seed << ", wrote " << c.out << "\n";
  return 0;
}

int run_gradcheck(const GradCheck& c, std::ostream& out) {
  const LayerKind kinds[] = {LayerKind::e2e_conv,   LayerKind::e2n_conv,      LayerKind::n2e_deconv,
                             LayerKind::e2e_deconv, LayerKind::node_to_graph, LayerKind::dense};
  const Activation acts[] = {Activation::linear, Activation::relu};
  json rows = json::array();
  bool ok = true;
  for (LayerKind kind : kinds) {
    for (Activation act : acts) {
      double worst = 0.0;
      for (std::size_t trial = 0; trial < c.trials; ++trial) {
        GradCheckOptions opts;
        opts.activation = act;
        const auto r = grad_check(kind, c.n, 3, 2, derive_seed(c.seed, trial, static_cast<std::uint64_t>(kind)), opts);
        worst = std::max(worst, r.max_rel_error);
      }
      const bool pass = worst < c.tolerance;
      ok = ok && pass;
      out << to_string(kind) << " " << to_string(act) << " max_rel_error=" << worst << (pass ? " ok" : " FAIL")
          << "\n";
      rows.push_back({{"layer", to_string(kind)}, {"activation", to_string(act)}, {"max_rel_error", worst},
                      {"pass", pass}});
    }
  }
  if (!c.out.empty()) {
    write_json(c.out, {{"command", "gradcheck"}, {"n", c.n}, {"trials", c.trials}, {"seed", c.seed},
                       {"tolerance", c.tolerance}, {"layers", rows}});
  }
  out << "gradcheck: " << (ok ? "all layers below " : "some layers above ") << c.tolerance << " (n=" << c.n
      << ", trials=" << c.trials << ", seed=" << c.seed << ")\n";
  return ok ? 0 : 1;
}

int run_info(const Info& c, std::ostream& out) {
  if (c.checkpoint) {
    const ModelParams p = load_checkpoint(*c.checkpoint);
    out << "checkpoint " << *c.checkpoint << ": role=" << to_string(p.role()) << " n=" << p.arch().n
        << " params=" << p.param_count() << " layers=" << p.layers().size() << " seed=" << p.seed() << "\n";
    if (p.role() == Role::translator) {
      const auto noise = std::vector<double>(p.arch().noise_dim * p.arch().n, 0.0);
      const auto r = translator_forward(p, FeatureTensor(p.arch().n, 1), noise, true);
      out << "shapes:";
      for (const auto& s : shape_trace(*r.cache)) out << " " << to_string(s);
      out << "\n";
    }
    return 0;
  }
  const Dataset ds = read_dataset(fs::path(*c.data));
  std::size_t x_edges = 0, y_edges = 0;
  for (const auto& p : ds.pairs) {
    x_edges += p.input.edge_count();
    y_edges += p.target.edge_count();
  }
  const double pairs = std::max<double>(1.0, static_cast<double>(ds.pairs.size()));
  out << "dataset " << *c.data << ": kind=" << to_string(ds.kind) << " n=" << ds.n << " pairs=" << ds.pairs.size()
      << " train=" << ds.indices(Split::train).size() << " test=" << ds.indices(Split::test).size()
      << " mean_input_edges=" << to_fixed(static_cast<double>(x_edges) / pairs, 2)
      << " mean_target_edges=" << to_fixed(static_cast<double>(y_edges) / pairs, 2) << "\n";
  return 0;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Graph-to-graph translation with adversarial training", "gtgan"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  const auto kind_check = parsed_by([](const std::string& s) { return parse_dataset_kind(s); }, "KIND");
  const auto act_check = parsed_by([](const std::string& s) { return parse_activation(s); }, "ACT");
  const auto skip_check = parsed_by([](const std::string& s) { return parse_skip_mode(s); }, "SKIP");
  const auto split_check = parsed_by([](const std::string& s) { return parse_split_or_all(s); }, "SPLIT");

  GenData gen;
  std::string gen_kind;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic paired dataset");
  g->add_option("--kind", gen_kind, "scale_free or poisson")->required()->check(kind_check);
  g->add_option("--n", gen.n, "Nodes per graph")->required()->check(CLI::Range(3, 100000));
  g->add_option("--count", gen.count, "Number of pairs")->required()->check(CLI::Range(2, 10000000));
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--train-fraction", gen.train_fraction, "Fraction of pairs in the train split")
      ->check(CLI::Range(0.0, 1.0));
  g->add_option("--lambda", gen.lambda, "Poisson mean of the edge increase ratio")->check(CLI::NonNegativeNumber);
  g->add_option("--beta", gen.beta, "Scale-free edge-between-existing-nodes probability")
      ->check(CLI::Range(0.0, 1.0));
  g->add_option("--out", gen.out, "Output directory")->required();

  IngestAuth ing;
  auto* ia = app.add_subcommand("ingest-auth", "Build normal/malicious pairs from an authentication log");
  ia->add_option("--log", ing.log, "CSV: time,user,src_computer,dst_computer,red_team")->required();
  ia->add_option("--window", ing.window, "Window length in time units")->required()->check(CLI::PositiveNumber);
  ia->add_option("--n", ing.n, "Padded node count")->required()->check(CLI::Range(2, 100000));
  ia->add_option("--train-fraction", ing.train_fraction, "Fraction of users in the train split")
      ->check(CLI::Range(0.0, 1.0));
  ia->add_option("--seed", ing.seed, "Seed for the per-user split");
  ia->add_option("--out", ing.out, "Output directory")->required();

  Train tr;
  std::string loss = "non-saturating";
  auto* t = app.add_subcommand("train", "Train a translator and discriminator");
  t->add_option("--data", tr.data, "Dataset JSONL")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--epochs", tr.config.epochs, "Passes over the train split");
  t->add_option("--steps", tr.config.max_generator_steps, "Stop after this many generator steps (0 = no cap)");
  t->add_option("--batch-size", tr.config.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  t->add_option("--lr-g", tr.config.lr_generator, "Translator learning rate")->check(CLI::PositiveNumber);
  t->add_option("--lr-d", tr.config.lr_discriminator, "Discriminator learning rate")->check(CLI::PositiveNumber);
  t->add_option("--beta1", tr.config.beta1, "ADAM beta1")->check(CLI::Range(0.0, 0.999999));
  t->add_option("--beta2", tr.config.beta2, "ADAM beta2")->check(CLI::Range(0.0, 0.999999));
  t->add_option("--adam-eps", tr.config.epsilon, "ADAM epsilon")->check(CLI::PositiveNumber);
  t->add_option("--d-steps", tr.config.d_steps_per_g_step, "Discriminator updates per generator update")
      ->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.config.seed, "Random seed");
  t->add_option("--noise-dim", tr.config.noise_dim, "Noise maps appended at the bottleneck");
  t->add_option("--checkpoint-every", tr.config.checkpoint_every, "Checkpoint cadence in generator steps");
  t->add_option("--loss", loss, "Generator loss")->check(CLI::IsMember({"non-saturating", "minimax"}));
  t->add_option("--recon-weight", tr.config.reconstruction_weight, "Weight of an added MSE term (0 = off)")
      ->check(CLI::NonNegativeNumber);
  t->add_option("--skip", tr.skip, "add or none")->check(skip_check);
  t->add_option("--output-activation", tr.output_activation, "auto, relu or sigmoid");
  t->add_option("--threads", tr.config.threads, "Worker threads")->check(CLI::PositiveNumber);

  Translate tl;
  auto* tt = app.add_subcommand("translate", "Translate dataset inputs with a trained translator");
  tt->add_option("--checkpoint", tl.checkpoint, "Translator checkpoint")->required();
  tt->add_option("--data", tl.data, "Dataset JSONL")->required();
  tt->add_option("--out", tl.out, "Output JSONL")->required();
  tt->add_option("--split", tl.split, "train, test or all")->check(split_check);
  tt->add_option("--seed", tl.seed, "Noise seed");
  tt->add_option("--threads", tl.threads, "Worker threads")->check(CLI::PositiveNumber);

  EvalDirect ed;
  auto* d = app.add_subcommand("eval-direct", "Degree distances and property errors on the test split");
  d->add_option("--checkpoint", ed.checkpoint, "Translator checkpoint")->required();
  d->add_option("--data", ed.data, "Dataset JSONL")->required();
  d->add_option("--out", ed.out, "Report JSON")->required();
  d->add_option("--seed", ed.seed, "Noise seed");
  d->add_option("--threads", ed.threads, "Worker threads")->check(CLI::PositiveNumber);

  EvalIndirect ei;
  auto* i = app.add_subcommand("eval-indirect", "Transfer-classifier evaluation on the test split");
  i->add_option("--checkpoint", ei.checkpoint, "Translator checkpoint")->required();
  i->add_option("--data", ei.data, "Dataset JSONL")->required();
  i->add_option("--out", ei.out, "Report JSON")->required();
  i->add_option("--seed", ei.seed, "Seed for the split, noise and classifiers");
  i->add_option("--clf-epochs", ei.classifier.epochs, "Classifier epochs");
  i->add_option("--clf-steps", ei.classifier.max_steps, "Classifier step cap (0 = none)");
  i->add_option("--clf-batch-size", ei.classifier.batch_size, "Classifier minibatch size")
      ->check(CLI::PositiveNumber);
  i->add_option("--clf-lr", ei.classifier.lr, "Classifier learning rate")->check(CLI::PositiveNumber);
  i->add_option("--binarize", ei.binarize, "Threshold classifier inputs at 0.5")
      ->check(CLI::IsMember({"auto", "yes", "no"}));
  i->add_option("--threads", ei.classifier.threads, "Worker threads")->check(CLI::PositiveNumber);

  GradCheck gc;
  auto* gcc = app.add_subcommand("gradcheck", "Finite-difference check of every layer type");
  gcc->add_option("--n", gc.n, "Nodes")->check(CLI::Range(2, 64));
  gcc->add_option("--trials", gc.trials, "Seeded checks per layer and activation")->check(CLI::PositiveNumber);
  gcc->add_option("--seed", gc.seed, "Seed");
  gcc->add_option("--tolerance", gc.tolerance, "Maximum relative error")->check(CLI::PositiveNumber);
  gcc->add_option("--out", gc.out, "Optional report JSON");

  Info info;
  std::string info_ckpt, info_data;
  auto* in = app.add_subcommand("info", "Summarise a checkpoint or a dataset");
  auto* ck_opt = in->add_option("--checkpoint", info_ckpt, "Checkpoint JSON");
  auto* data_opt = in->add_option("--data", info_data, "Dataset JSONL");
  ck_opt->excludes(data_opt);
  in->require_option(1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw UsageError("help requested", 0, app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw UsageError("help requested", 0, app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    std::string help;
    for (auto* sub : app.get_subcommands()) help = sub->help();
    if (help.empty()) help = app.help();
    throw UsageError(e.what(), 2, help);
  }

  try {
    if (g->parsed()) {
      gen.kind = parse_dataset_kind(gen_kind);
      if (gen.kind == DatasetKind::auth) throw std::invalid_argument("--kind auth is produced by ingest-auth");
      if (!(gen.train_fraction > 0.0 && gen.train_fraction < 1.0)) {
        throw std::invalid_argument("--train-fraction must be strictly between 0 and 1");
      }
      return gen;
    }
    if (ia->parsed()) {
      if (!(ing.train_fraction > 0.0 && ing.train_fraction < 1.0)) {
        throw std::invalid_argument("--train-fraction must be strictly between 0 and 1");
      }
      return ing;
    }
    if (t->parsed()) {
      tr.config.generator_loss = loss == "minimax" ? GeneratorLoss::minimax : GeneratorLoss::non_saturating;
      if (tr.output_activation != "auto" && parse_activation(tr.output_activation) == Activation::linear) {
        throw std::invalid_argument("--output-activation must be auto, relu or sigmoid");
      }
      tr.config.validate();
      check_not_directory(tr.data, "--data");
      return tr;
    }
    if (tt->parsed()) {
      check_not_directory(tl.out, "--out");
      return tl;
    }
    if (d->parsed()) {
      check_not_directory(ed.out, "--out");
      return ed;
    }
    if (i->parsed()) {
      check_not_directory(ei.out, "--out");
      return ei;
    }
    if (gcc->parsed()) return gc;
    if (!info_ckpt.empty()) info.checkpoint = info_ckpt;
    if (!info_data.empty()) info.data = info_data;
    return info;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what(), 2);
  }
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    return std::visit(
        [&](const auto& c) -> int {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, GenData>) return run_gen_data(c, out);
          else if constexpr (std::is_same_v<T, IngestAuth>) return run_ingest_auth(c, out, err);
          else if constexpr (std::is_same_v<T, Train>) return run_train(c, out, err);
          else if constexpr (std::is_same_v<T, Translate>) return run_translate(c, out);
          else if constexpr (std::is_same_v<T, EvalDirect>) return run_eval_direct(c, out);
          else if constexpr (std::is_same_v<T, EvalIndirect>) return run_eval_indirect(c, out);
          else if constexpr (std::is_same_v<T, GradCheck>) return run_gradcheck(c, out);
          else return run_info(c, out);
        },
        cmd);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const Command cmd = parse_args(args);
    return run(cmd, std::cout, std::cerr);
  } catch (const UsageError& e) {
    if (e.exit_code() == 0) {
      std::cout << e.help();
      return 0;
    }
    std::cerr << "usage error: " << e.what() << "\n";
    if (!e.help().empty()) std::cerr << e.help();
    return e.exit_code();
  }
}

}  // namespace gtgan::cli
