#include "hgb/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "hgb/errors.hpp"

namespace hgb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& file, std::size_t line, const std::string& msg) {
  throw DataError(file + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_index(std::string_view s, Index& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Calls fn(line_no, text) for every non-final-empty line of a file.
template <typename Fn>
void for_each_line(const fs::path& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file " + path.string());
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    fn(no, std::string_view(line));
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

}  // namespace

HeteroGraph load_graph(const fs::path& dir, const LoadOptions& options) {
  const json meta = read_json(dir / "meta.json");
  HeteroGraph g;
  try {
    g.name = meta.value("name", dir.filename().string());
    for (const auto& nt : meta.at("node_types")) {
      g.node_types.push_back({nt.at("name").get<std::string>(), nt.at("count").get<std::size_t>(),
                              nt.value("feature_dim", std::size_t{0})});
    }
    std::map<std::string, Index> ntype_ids;
    for (Index t = 0; t < g.node_types.size(); ++t) {
      if (!ntype_ids.emplace(g.node_types[t].name, t).second) {
        throw DataError("meta.json: duplicate node type '" + g.node_types[t].name + "'");
      }
    }
    auto ntype = [&](const std::string& name) {
      auto it = ntype_ids.find(name);
      if (it == ntype_ids.end()) throw DataError("meta.json: unknown node type '" + name + "'");
      return it->second;
    };
    for (const auto& et : meta.at("edge_types")) {
      EdgeTypeInfo info;
      info.name = et.at("name").get<std::string>();
      if (info.name == kSelfEdgeTypeName) {
        throw DataError("meta.json: edge type name 'self' is reserved");
      }
      info.src_type = ntype(et.at("src_type").get<std::string>());
      info.dst_type = ntype(et.at("dst_type").get<std::string>());
      if (et.contains("reverse") && !et.at("reverse").is_null()) {
        info.reverse = et.at("reverse").get<std::string>();
      }
      g.edge_types.push_back(std::move(info));
    }
    if (meta.contains("task")) g.task = meta.at("task");
  } catch (const json::exception& e) {
    throw DataError(std::string("meta.json: ") + e.what());
  }
  if (g.node_types.empty() || g.edge_types.empty()) {
    throw DataError("meta.json: at least one node type and one edge type are required");
  }
  for (const auto& et : g.edge_types) {
    if (et.reverse && !g.find_edge_type(*et.reverse)) {
      throw DataError("meta.json: edge type '" + et.name + "' names unknown reverse '" +
                      *et.reverse + "'");
    }
  }

  std::size_t total = 0;
  for (const auto& nt : g.node_types) total += nt.count;
  constexpr Index kUnset = static_cast<Index>(-1);
  g.node_type.assign(total, kUnset);
  std::vector<std::vector<double>> raw(total);

  for_each_line(dir / "nodes.tsv", [&](std::size_t no, std::string_view line) {
    const auto fields = split(line, '\t');
    if (fields.size() != 3) fail("nodes.tsv", no, "expected 3 tab-separated fields");
    Index id;
    if (!parse_index(fields[0], id)) fail("nodes.tsv", no, "bad node id");
    if (id >= total) {
      fail("nodes.tsv", no, "node id " + std::to_string(id) + " >= declared node count " +
                                std::to_string(total));
    }
    if (g.node_type[id] != kUnset) fail("nodes.tsv", no, "duplicate node id " + std::to_string(id));
    Index t = 0;
    bool found = false;
    for (; t < g.node_types.size(); ++t) {
      if (g.node_types[t].name == fields[1]) {
        found = true;
        break;
      }
    }
    if (!found) fail("nodes.tsv", no, "unknown node type '" + std::string(fields[1]) + "'");
    g.node_type[id] = t;
    const std::size_t dim = g.node_types[t].feature_dim;
    std::vector<double> values;
    if (!fields[2].empty()) {
      for (auto tok : split(fields[2], ',')) {
        double v;
        if (!parse_double(tok, v)) fail("nodes.tsv", no, "bad feature value '" + std::string(tok) + "'");
        values.push_back(v);
      }
    }
    if (values.size() != dim) {
      fail("nodes.tsv", no, "feature dimension " + std::to_string(values.size()) +
                                " does not match declared " + std::to_string(dim) + " for type '" +
                                g.node_types[t].name + "'");
    }
    raw[id] = std::move(values);
  });
  for (Index v = 0; v < total; ++v) {
    if (g.node_type[v] == kUnset) throw DataError("nodes.tsv: node id " + std::to_string(v) + " missing");
  }
  g.features.clear();
  for (const auto& nt : g.node_types) g.features.emplace_back(nt.count, nt.feature_dim);
  {
    std::vector<Index> next(g.node_types.size(), 0);
    std::vector<std::size_t> seen(g.node_types.size(), 0);
    for (Index v = 0; v < total; ++v) {
      const Index t = g.node_type[v];
      if (++seen[t] > g.node_types[t].count) {
        throw DataError("nodes.tsv: more nodes of type '" + g.node_types[t].name +
                        "' than the declared count " + std::to_string(g.node_types[t].count));
      }
      const Index row = next[t]++;
      std::copy(raw[v].begin(), raw[v].end(), g.features[t].row(row).begin());
    }
  }

  for_each_line(dir / "edges.tsv", [&](std::size_t no, std::string_view line) {
    const auto fields = split(line, '\t');
    if (fields.size() != 3) fail("edges.tsv", no, "expected 3 tab-separated fields");
    Index s, d;
    if (!parse_index(fields[0], s) || !parse_index(fields[1], d)) fail("edges.tsv", no, "bad node id");
    if (s >= total || d >= total) fail("edges.tsv", no, "node id out of range");
    auto t = g.find_edge_type(std::string(fields[2]));
    if (!t) fail("edges.tsv", no, "unknown edge type '" + std::string(fields[2]) + "'");
    const auto& et = g.edge_types[*t];
    if (g.node_type[s] != et.src_type || g.node_type[d] != et.dst_type) {
      fail("edges.tsv", no, "endpoint types do not match edge type '" + et.name + "'");
    }
    g.edges.push_back(s, d, *t);
  });

  if (fs::exists(dir / "labels.tsv")) {
    Labels labels;
    labels.per_node.assign(total, {});
    const json label_meta = meta.contains("labels") ? meta.at("labels") : g.task;
    labels.multi_label = label_meta.value("multi_label", false);
    std::size_t max_label = 0;
    bool any = false;
    for_each_line(dir / "labels.tsv", [&](std::size_t no, std::string_view line) {
      const auto fields = split(line, '\t');
      if (fields.size() != 2) fail("labels.tsv", no, "expected 2 tab-separated fields");
      Index id;
      if (!parse_index(fields[0], id) || id >= total) fail("labels.tsv", no, "bad node id");
      if (!labels.per_node[id].empty()) fail("labels.tsv", no, "duplicate label row for node");
      for (auto tok : split(fields[1], ',')) {
        Index c;
        if (!parse_index(tok, c)) fail("labels.tsv", no, "bad label '" + std::string(tok) + "'");
        labels.per_node[id].push_back(c);
        max_label = std::max(max_label, c);
        any = true;
      }
      if (labels.per_node[id].size() > 1) labels.multi_label = true;
    });
    labels.num_classes = label_meta.value("num_classes", any ? max_label + 1 : std::size_t{0});
    if (any && max_label >= labels.num_classes) {
      throw DataError("labels.tsv: label " + std::to_string(max_label) + " >= num_classes " +
                      std::to_string(labels.num_classes));
    }
    g.labels = std::move(labels);
  }

  g.validate();
  if (options.materialize_reverse) g = materialize_reverse_edges(g);
  return g;
}

void save_graph(const HeteroGraph& graph, const fs::path& dir) {
  if (graph.self_edge_type()) {
    throw ContractError("save_graph: graph carries the reserved self-loop type; save before add_self_loops");
  }
  graph.validate();
  fs::create_directories(dir);

  json meta;
  meta["name"] = graph.name;
  meta["node_types"] = json::array();
  for (const auto& nt : graph.node_types) {
    meta["node_types"].push_back({{"name", nt.name}, {"count", nt.count}, {"feature_dim", nt.feature_dim}});
  }
  meta["edge_types"] = json::array();
  for (const auto& et : graph.edge_types) {
    json e = {{"name", et.name},
              {"src_type", graph.node_types[et.src_type].name},
              {"dst_type", graph.node_types[et.dst_type].name}};
    if (et.reverse) e["reverse"] = *et.reverse;
    meta["edge_types"].push_back(std::move(e));
  }
  meta["task"] = graph.task;
  if (graph.labels) {
    meta["labels"] = {{"num_classes", graph.labels->num_classes},
                      {"multi_label", graph.labels->multi_label}};
  }
  {
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }

  const auto local = graph.local_indices();
  {
    std::ofstream out(dir / "nodes.tsv", std::ios::binary);
    for (Index v = 0; v < graph.node_count(); ++v) {
      const Index t = graph.node_type[v];
      out << v << '\t' << graph.node_types[t].name << '\t';
      const auto row = graph.features[t].row(local[v]);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << format_double(row[c]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "edges.tsv", std::ios::binary);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      out << graph.edges.src[e] << '\t' << graph.edges.dst[e] << '\t'
          << graph.edge_types[graph.edges.etype[e]].name << '\n';
    }
  }
  if (graph.labels) {
    std::ofstream out(dir / "labels.tsv", std::ios::binary);
    for (Index v = 0; v < graph.node_count(); ++v) {
      const auto& ls = graph.labels->per_node[v];
      if (ls.empty()) continue;
      out << v << '\t';
      for (std::size_t i = 0; i < ls.size(); ++i) {
        if (i) out << ',';
        out << ls[i];
      }
      out << '\n';
    }
  } else if (fs::exists(dir / "labels.tsv")) {
    fs::remove(dir / "labels.tsv");
  }
}

}  // namespace hgb
