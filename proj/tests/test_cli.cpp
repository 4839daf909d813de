#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "gtgan/cli.hpp"
#include "gtgan/serialization.hpp"

using namespace gtgan;
namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("gtgan_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

// Parses and runs in-process, mapping usage errors like the binary does.
Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  try {
    const auto cmd = cli::parse_args(args);
    const int code = cli::run(cmd, out, err);
    return {code, out.str(), err.str()};
  } catch (const cli::UsageError& e) {
    return {e.exit_code(), out.str(), e.what()};
  }
}

int exit_code_of(const std::string& args) {
  const char* bin = std::getenv("GTGAN_CLI");
  REQUIRE(bin != nullptr);
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("argument parsing") {
  const auto gen = cli::parse_args({"gen-data", "--kind", "poisson", "--n", "20", "--count", "10", "--seed", "3",
                                    "--out", "x"});
  const auto& g = std::get<cli::GenData>(gen);
  CHECK(g.kind == DatasetKind::poisson);
  CHECK(g.n == 20);
  CHECK(g.count == 10);
  CHECK(g.seed == 3);
  CHECK(g.lambda == 5.0);

  const auto tr = std::get<cli::Train>(cli::parse_args(
      {"train", "--data", "d.jsonl", "--out", "o", "--steps", "7", "--lr-d", "2e-4", "--loss", "minimax"}));
  CHECK(tr.config.max_generator_steps == 7);
  CHECK(tr.config.lr_discriminator == 2e-4);
  CHECK(tr.config.generator_loss == GeneratorLoss::minimax);
  CHECK(tr.config.batch_size == 8);
  CHECK(tr.output_activation == "auto");

  CHECK(std::holds_alternative<cli::GradCheck>(cli::parse_args({"gradcheck"})));

  try {
    cli::parse_args({"gen-data", "--kind", "bogus", "--n", "5", "--count", "4", "--out", "x"});
    FAIL("expected a usage error");
  } catch (const cli::UsageError& e) {
    CHECK(e.exit_code() == 2);
    const std::string msg = e.what();
    CHECK(msg.find("poisson") != std::string::npos);
    CHECK(msg.find("scale_free") != std::string::npos);
  }
  CHECK_THROWS_AS(cli::parse_args({"train", "--out", "o"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"frobnicate"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"info", "--checkpoint", "a", "--data", "b"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"train", "--data", "d", "--out", "o", "--skip", "maybe"}), cli::UsageError);
}

TEST_CASE("gradcheck passes") {
  const auto r = call({"gradcheck", "--n", "5", "--trials", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("e2e_conv") != std::string::npos);
}

TEST_CASE("pipeline end to end") {
  const auto data = path("data");
  REQUIRE(call({"gen-data", "--kind", "poisson", "--n", "8", "--count", "8", "--seed", "1", "--train-fraction",
                "0.5", "--out", data})
              .code == 0);
  const auto jsonl = data + "/dataset.jsonl";
  CHECK(read_dataset(fs::path(jsonl)).pairs.size() == 8);

  auto train_into = [&](const std::string& out) {
    return call({"train", "--data", jsonl, "--out", out, "--steps", "3", "--batch-size", "2", "--seed", "5",
                 "--checkpoint-every", "2"});
  };
  const auto run1 = path("run1"), run2 = path("run2");
  REQUIRE(train_into(run1).code == 0);
  REQUIRE(train_into(run2).code == 0);
  for (const std::string f : {"translator.json", "discriminator.json", "history.csv",
                              "checkpoints/step_2_translator.json", "checkpoints/step_2_discriminator.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(run1 + "/" + f));
    CHECK(read_file(run1 + "/" + f) == read_file(run2 + "/" + f));
  }
  const auto translator = load_checkpoint(fs::path(run1 + "/translator.json"));
  CHECK(translator.arch().output_activation == Activation::sigmoid);

  const auto ckpt = run1 + "/translator.json";
  REQUIRE(call({"translate", "--checkpoint", ckpt, "--data", jsonl, "--out", path("gen.jsonl")}).code == 0);
  CHECK(read_dataset(fs::path(path("gen.jsonl"))).pairs.size() == 4);

  REQUIRE(call({"eval-direct", "--checkpoint", ckpt, "--data", jsonl, "--out", path("direct.json"), "--seed", "2"})
              .code == 0);
  const auto direct = nlohmann::json::parse(read_file(path("direct.json")));
  CHECK(direct.at("command") == "eval-direct");
  CHECK(direct.at("seed") == 2);
  CHECK(direct.contains("direct"));

  REQUIRE(call({"eval-indirect", "--checkpoint", ckpt, "--data", jsonl, "--out", path("indirect.json"),
                "--clf-steps", "5"})
              .code == 0);
  const auto indirect = nlohmann::json::parse(read_file(path("indirect.json")));
  CHECK(indirect.at("indirect").contains("generated_trained"));
  const auto again = path("indirect2.json");
  call({"eval-indirect", "--checkpoint", ckpt, "--data", jsonl, "--out", again, "--clf-steps", "5"});
  CHECK(read_file(again) == read_file(path("indirect.json")));

  const auto info = call({"info", "--checkpoint", ckpt});
  CHECK(info.code == 0);
  CHECK(info.out.find("role=translator") != std::string::npos);
  CHECK(call({"info", "--data", jsonl}).out.find("kind=poisson") != std::string::npos);

  // a dataset of a different size cannot be translated
  const auto other = path("other");
  call({"gen-data", "--kind", "poisson", "--n", "9", "--count", "4", "--out", other});
  const auto mismatch = call({"translate", "--checkpoint", ckpt, "--data", other + "/dataset.jsonl", "--out",
                              path("bad.jsonl")});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("error") != std::string::npos);
  CHECK(call({"eval-direct", "--checkpoint", path("missing.json"), "--data", jsonl, "--out", path("x.json")}).code ==
        1);
}

TEST_CASE("ingest-auth") {
  const auto out = path("auth");
  const auto r = call({"ingest-auth", "--log", std::string(GTGAN_FIXTURES) + "/auth_small.csv", "--window", "100",
                       "--n", "5", "--out", out});
  REQUIRE(r.code == 0);
  const auto ds = read_dataset(fs::path(out + "/dataset.jsonl"));
  CHECK(ds.kind == DatasetKind::auth);
  CHECK(ds.pairs.size() == 2);
}

TEST_CASE("binary exit codes") {
  CHECK(exit_code_of("gradcheck --n 4 --trials 1") == 0);
  CHECK(exit_code_of("gen-data --kind bogus --n 5 --count 4 --out " + path("b")) == 2);
  CHECK(exit_code_of("train --out " + path("t")) == 2);
  CHECK(exit_code_of("info --data " + path("does_not_exist.jsonl")) == 1);
  CHECK(exit_code_of("--help") == 0);
}
