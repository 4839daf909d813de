#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gtgan/model.hpp"
#include "gtgan/synth.hpp"

namespace gtgan {

inline constexpr int kCheckpointFormatVersion = 1;

/// A dataset or checkpoint file that does not follow its format. `line` is
/// 1-based for JSONL input and 0 for whole-file formats.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Dataset JSON Lines, one pair per line:
//   {"id":0,"n":20,"split":"train","x_edges":[[i,j,w],...],"y_edges":[...],"meta":{...}}
// The dataset kind travels in meta["dataset_kind"] and is removed on read.
void write_dataset(const Dataset& ds, std::ostream& out);
Dataset read_dataset(std::istream& in);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

nlohmann::json arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const nlohmann::json& j);

// Checkpoint JSON:
//   {"format_version":1,"role":"translator","arch":{...},"rng_seed":7,"parameters":[...]}
// parameters follow ModelParams::flatten().
nlohmann::json checkpoint_to_json(const ModelParams& p);
ModelParams checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Writes `content` to a sibling temporary file and renames it over `path`.
/// Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace gtgan
