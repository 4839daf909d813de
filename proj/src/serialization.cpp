#include "gtgan/serialization.hpp"

#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace gtgan {

using nlohmann::json;

namespace {

json edges_to_json(const DirectedGraph& g) {
  json out = json::array();
  for (const Edge& e : g.edges()) out.push_back(json::array({e.source, e.target, e.weight}));
  return out;
}

DirectedGraph edges_from_json(const json& j, std::size_t n, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
  std::vector<Edge> edges;
  edges.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
        !e[2].is_number()) {
      throw std::invalid_argument(std::string(field) + " entries must be [i, j, w]");
    }
    edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
  }
  return DirectedGraph::from_edges(n, edges);
}

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace

void write_dataset(const Dataset& ds, std::ostream& out) {
  ds.validate();
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const GraphPair& p = ds.pairs[i];
    json meta = p.meta.is_object() ? p.meta : json::object();
    meta["dataset_kind"] = std::string(to_string(ds.kind));
    json line = {{"id", i},
                 {"n", ds.n},
                 {"split", std::string(to_string(ds.split[i]))},
                 {"x_edges", edges_to_json(p.input)},
                 {"y_edges", edges_to_json(p.target)},
                 {"meta", std::move(meta)}};
    out << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  bool first = true;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
      const json& n_field = require(j, "n");
      if (!n_field.is_number_unsigned()) throw std::invalid_argument("n must be a nonnegative integer");
      const auto n = n_field.get<std::size_t>();
      json meta = j.contains("meta") ? j.at("meta") : json::object();
      if (!meta.is_object()) throw std::invalid_argument("meta must be an object");
      DatasetKind kind = DatasetKind::poisson;
      if (meta.contains("dataset_kind")) {
        kind = parse_dataset_kind(meta.at("dataset_kind").get<std::string>());
        meta.erase("dataset_kind");
      }
      if (first) {
        ds.n = n;
        ds.kind = kind;
        first = false;
      } else if (n != ds.n) {
        throw std::invalid_argument("n=" + std::to_string(n) + " differs from n=" + std::to_string(ds.n) +
                                    " on earlier lines");
      } else if (kind != ds.kind) {
        throw std::invalid_argument("dataset_kind differs from earlier lines");
      }
      const Split split = parse_split(require(j, "split").get<std::string>());
      GraphPair pair{edges_from_json(require(j, "x_edges"), n, "x_edges"),
                     edges_from_json(require(j, "y_edges"), n, "y_edges"), std::move(meta)};
      ds.pairs.push_back(std::move(pair));
      ds.split.push_back(split);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(line_no, e.what());
    }
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  write_dataset(ds, out);
  write_file_atomic(path, out.str());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  try {
    return read_dataset(in);
  } catch (const FormatError& e) {
    throw FormatError(e.line(), path.string() + ": " + e.what());
  }
}

json arch_to_json(const ArchSpec& a) {
  return {{"n", a.n},
          {"encoder_channels", a.encoder_channels},
          {"node_channels", a.node_channels},
          {"decoder_channels", a.decoder_channels},
          {"disc_channels", a.disc_channels},
          {"disc_node_channels", a.disc_node_channels},
          {"disc_graph_channels", a.disc_graph_channels},
          {"fc_width", a.fc_width},
          {"noise_dim", a.noise_dim},
          {"skip", std::string(to_string(a.skip))},
          {"hidden_activation", std::string(to_string(a.hidden_activation))},
          {"output_activation", std::string(to_string(a.output_activation))},
          {"zero_diagonal", a.zero_diagonal}};
}

ArchSpec arch_from_json(const json& j) {
  ArchSpec a;
  a.n = require(j, "n").get<std::size_t>();
  a.encoder_channels = require(j, "encoder_channels").get<std::vector<std::size_t>>();
  a.node_channels = require(j, "node_channels").get<std::size_t>();
  a.decoder_channels = require(j, "decoder_channels").get<std::vector<std::size_t>>();
  a.disc_channels = require(j, "disc_channels").get<std::vector<std::size_t>>();
  a.disc_node_channels = require(j, "disc_node_channels").get<std::size_t>();
  a.disc_graph_channels = require(j, "disc_graph_channels").get<std::size_t>();
  a.fc_width = require(j, "fc_width").get<std::size_t>();
  a.noise_dim = require(j, "noise_dim").get<std::size_t>();
  a.skip = parse_skip_mode(require(j, "skip").get<std::string>());
  a.hidden_activation = parse_activation(require(j, "hidden_activation").get<std::string>());
  a.output_activation = parse_activation(require(j, "output_activation").get<std::string>());
  a.zero_diagonal = require(j, "zero_diagonal").get<bool>();
  a.validate();
  return a;
}

json checkpoint_to_json(const ModelParams& p) {
  return {{"format_version", kCheckpointFormatVersion},
          {"role", std::string(to_string(p.role()))},
          {"arch", arch_to_json(p.arch())},
          {"rng_seed", p.seed()},
          {"parameters", p.flatten()}};
}

ModelParams checkpoint_from_json(const json& j) {
  try {
    const int version = require(j, "format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw std::invalid_argument("unsupported checkpoint format_version " + std::to_string(version));
    }
    const Role role = parse_role(require(j, "role").get<std::string>());
    const ArchSpec arch = arch_from_json(require(j, "arch"));
    const auto seed = require(j, "rng_seed").get<std::uint64_t>();
    const auto values = require(j, "parameters").get<std::vector<double>>();
    ModelParams p(arch, role, layer_shapes(arch, role), seed);
    if (values.size() != p.param_count()) {
      throw std::invalid_argument("checkpoint has " + std::to_string(values.size()) + " parameters, arch needs " +
                                  std::to_string(p.param_count()));
    }
    p.assign(values);
    return p;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(0, std::string("bad checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_to_json(p).dump() + "\n");
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(0, path.string() + ": " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const FormatError& e) {
    throw FormatError(0, path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw std::runtime_error("write failed for " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace gtgan
