#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtgan/graph.hpp"
#include "gtgan/synth.hpp"

namespace gtgan {

// One line of the simplified authentication log:
//   time,user,src_computer,dst_computer,red_team
struct AuthEvent {
  std::int64_t time = 0;
  std::string user;
  std::string src_computer;
  std::string dst_computer;
  bool red_team = false;

  bool operator==(const AuthEvent&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Blank lines are skipped; any other malformed line throws ParseError with
/// its 1-based line number.
std::vector<AuthEvent> parse_auth_log(std::istream& in);

struct UserWindowGraphs {
  std::string user;
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;  // exclusive
  DirectedGraph normal;
  std::optional<DirectedGraph> malicious;
  std::vector<std::string> node_labels;  // index -> computer, sorted
};

/// Groups events by (user, floor(time / window)). Edge weights are event
/// counts. The normal graph counts non-red events; the malicious graph,
/// present iff the window has a red-team event, counts every event.
/// Output is ordered by user then window.
std::vector<UserWindowGraphs> build_user_graphs(const std::vector<AuthEvent>& events,
                                                std::int64_t window);

/// Windows with a malicious graph become (normal -> malicious) pairs padded
/// with isolated nodes up to `n`. Windows touching more than `n` computers
/// are skipped and counted in `skipped` when provided. Meta keeps user,
/// window bounds and node labels.
Dataset auth_dataset(const std::vector<UserWindowGraphs>& windows, std::size_t n,
                     std::size_t* skipped = nullptr);

}  // namespace gtgan
