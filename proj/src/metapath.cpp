#include "hgb/metapath.hpp"

#include <algorithm>

#include "hgb/errors.hpp"

namespace hgb {

MetaPath metapath_from_names(const HeteroGraph& graph, const std::vector<std::string>& edge_type_names) {
  MetaPath path;
  for (const auto& name : edge_type_names) {
    auto t = graph.find_edge_type(name);
    if (!t) throw ContractError("meta-path names unknown edge type '" + name + "'");
    path.steps.push_back(*t);
  }
  check_metapath(graph, path);
  return path;
}

void check_metapath(const HeteroGraph& graph, const MetaPath& path) {
  if (path.steps.empty()) throw ContractError("meta-path has no steps");
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const Index t = path.steps[k];
    if (t >= graph.num_edge_types()) {
      throw ContractError("meta-path step " + std::to_string(k) + " has unknown edge type id " +
                          std::to_string(t));
    }
    if (graph.edge_types[t].src_type == kAnyNodeType) {
      throw ContractError("meta-path may not use the self-loop edge type");
    }
    if (k > 0) {
      const auto& prev = graph.edge_types[path.steps[k - 1]];
      const auto& cur = graph.edge_types[t];
      if (prev.dst_type != cur.src_type) {
        throw ContractError("meta-path step " + std::to_string(k) + " ('" + cur.name +
                            "') starts at type '" + graph.node_types[cur.src_type].name +
                            "' but the previous step ends at '" +
                            graph.node_types[prev.dst_type].name + "'");
      }
    }
  }
}

EdgeIndex metapath_neighbor_graph(const HeteroGraph& graph, const MetaPath& path) {
  check_metapath(graph, path);
  const std::size_t n = graph.node_count();

  // Per-step CSR adjacency (out-neighbours by src).
  struct Csr {
    std::vector<std::size_t> offsets;
    std::vector<Index> targets;
  };
  std::vector<Csr> adj;
  for (Index t : path.steps) {
    Csr c;
    c.offsets.assign(n + 1, 0);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      if (graph.edges.etype[e] == t) ++c.offsets[graph.edges.src[e] + 1];
    }
    for (std::size_t v = 0; v < n; ++v) c.offsets[v + 1] += c.offsets[v];
    c.targets.resize(c.offsets[n]);
    std::vector<std::size_t> fill(c.offsets.begin(), c.offsets.end() - 1);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      if (graph.edges.etype[e] == t) c.targets[fill[graph.edges.src[e]]++] = graph.edges.dst[e];
    }
    adj.push_back(std::move(c));
  }

  // Boolean row-by-row product: propagate a deduplicated frontier per start node.
  EdgeIndex out;
  std::vector<char> mark(n, 0);
  std::vector<Index> frontier, next;
  const Index start_type = graph.edge_types[path.steps.front()].src_type;
  for (Index u = 0; u < n; ++u) {
    if (graph.node_type[u] != start_type) continue;
    frontier.assign(1, u);
    for (const auto& c : adj) {
      next.clear();
      for (Index v : frontier) {
        for (std::size_t k = c.offsets[v]; k < c.offsets[v + 1]; ++k) {
          const Index w = c.targets[k];
          if (!mark[w]) {
            mark[w] = 1;
            next.push_back(w);
          }
        }
      }
      for (Index w : next) mark[w] = 0;
      frontier.swap(next);
      if (frontier.empty()) break;
    }
    std::sort(frontier.begin(), frontier.end());
    for (Index v : frontier) out.push_back(u, v, 0);
  }
  return out;
}

std::string to_string(const HeteroGraph& graph, const MetaPath& path) {
  std::string s;
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    if (k) s += '-';
    s += graph.edge_types.at(path.steps[k]).name;
  }
  return s;
}

}  // namespace hgb
