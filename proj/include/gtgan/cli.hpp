#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gtgan/evaluation.hpp"
#include "gtgan/model.hpp"
#include "gtgan/synth.hpp"
#include "gtgan/trainer.hpp"

namespace gtgan::cli {

/// Bad command line. `exit_code` is 0 for --help.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, int exit_code, std::string help = {})
      : std::runtime_error(what), exit_code_(exit_code), help_(std::move(help)) {}
  int exit_code() const { return exit_code_; }
  const std::string& help() const { return help_; }

 private:
  int exit_code_;
  std::string help_;
};

struct GenData {
  DatasetKind kind = DatasetKind::poisson;
  std::size_t n = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double train_fraction = 0.4;
  double lambda = 5.0;
  double beta = 0.54;
  std::string out;
};

struct IngestAuth {
  std::string log;
  std::int64_t window = 0;
  std::size_t n = 0;
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

struct Train {
  std::string data;
  std::string out;
  TrainConfig config;
  std::string skip = "add";
  std::string output_activation = "auto";  // auto: sigmoid for 0/1 synthetic data, relu for auth
};

struct Translate {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string split = "test";  // train, test or all
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct EvalDirect {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct EvalIndirect {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  ClassifierConfig classifier;
  std::string binarize = "auto";  // auto, yes, no
};

struct GradCheck {
  std::size_t n = 8;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  std::string out;  // optional JSON report
};

struct Info {
  std::optional<std::string> checkpoint;
  std::optional<std::string> data;
};

using Command = std::variant<GenData, IngestAuth, Train, Translate, EvalDirect, EvalIndirect, GradCheck, Info>;

/// args excludes the program name. Throws UsageError.
Command parse_args(const std::vector<std::string>& args);

/// Runs one command; errors are reported on `err` and turned into exit 1.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse_args + run with usage errors mapped to exit code 2.
int main(int argc, char** argv);

}  // namespace gtgan::cli
