#include "gtgan/auth_log.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace gtgan {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::vector<AuthEvent> parse_auth_log(std::istream& in) {
  std::vector<AuthEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    AuthEvent ev;
    const std::string& t = fields[0];
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), ev.time);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
      throw ParseError(line_no, "invalid time '" + t + "'");
    }
    if (ev.time < 0) throw ParseError(line_no, "negative time");
    ev.user = fields[1];
    ev.src_computer = fields[2];
    ev.dst_computer = fields[3];
    if (ev.user.empty() || ev.src_computer.empty() || ev.dst_computer.empty()) {
      throw ParseError(line_no, "empty identifier");
    }
    if (fields[4] == "0") {
      ev.red_team = false;
    } else if (fields[4] == "1") {
      ev.red_team = true;
    } else {
      throw ParseError(line_no, "red_team flag must be 0 or 1, got '" + fields[4] + "'");
    }
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<UserWindowGraphs> build_user_graphs(const std::vector<AuthEvent>& events,
                                                std::int64_t window) {
  if (window <= 0) throw std::invalid_argument("window must be > 0");

  std::map<std::pair<std::string, std::int64_t>, std::vector<const AuthEvent*>> groups;
  for (const auto& ev : events) groups[{ev.user, floor_div(ev.time, window)}].push_back(&ev);

  std::vector<UserWindowGraphs> out;
  out.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    std::set<std::string> computers;
    bool any_red = false;
    for (const AuthEvent* ev : members) {
      computers.insert(ev->src_computer);
      computers.insert(ev->dst_computer);
      any_red = any_red || ev->red_team;
    }
    UserWindowGraphs uw;
    uw.user = key.first;
    uw.window_start = key.second * window;
    uw.window_end = uw.window_start + window;
    uw.node_labels.assign(computers.begin(), computers.end());

    const std::size_t n = uw.node_labels.size();
    auto index_of = [&](const std::string& c) {
      return static_cast<std::size_t>(
          std::lower_bound(uw.node_labels.begin(), uw.node_labels.end(), c) -
          uw.node_labels.begin());
    };
    std::vector<double> normal(n * n, 0.0);
    std::vector<double> all(n * n, 0.0);
    for (const AuthEvent* ev : members) {
      const std::size_t idx = index_of(ev->src_computer) * n + index_of(ev->dst_computer);
      all[idx] += 1.0;
      if (!ev->red_team) normal[idx] += 1.0;
    }
    uw.normal = DirectedGraph::from_dense(n, std::move(normal));
    if (any_red) uw.malicious = DirectedGraph::from_dense(n, std::move(all));
    out.push_back(std::move(uw));
  }
  return out;
}

Dataset auth_dataset(const std::vector<UserWindowGraphs>& windows, std::size_t n,
                     std::size_t* skipped) {
  Dataset ds;
  ds.kind = DatasetKind::auth;
  ds.n = n;
  std::size_t dropped = 0;
  auto pad = [n](const DirectedGraph& g) {
    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < g.n(); ++i) {
      for (std::size_t j = 0; j < g.n(); ++j) w[i * n + j] = g.weight(i, j);
    }
    return DirectedGraph::from_dense(n, std::move(w));
  };
  for (const auto& uw : windows) {
    if (!uw.malicious) continue;
    if (uw.normal.n() > n) {
      ++dropped;
      continue;
    }
    GraphPair pair;
    pair.input = pad(uw.normal);
    pair.target = pad(*uw.malicious);
    pair.meta["user"] = uw.user;
    pair.meta["window_start"] = uw.window_start;
    pair.meta["window_end"] = uw.window_end;
    pair.meta["node_labels"] = uw.node_labels;
    ds.pairs.push_back(std::move(pair));
    ds.split.push_back(Split::train);
  }
  if (skipped != nullptr) *skipped = dropped;
  return ds;
}

}  // namespace gtgan
