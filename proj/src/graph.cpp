#include "hgb/graph.hpp"

#include <algorithm>
#include <set>

#include "hgb/errors.hpp"

namespace hgb {

void EdgeIndex::validate(std::size_t num_nodes, std::size_t num_edge_types) const {
  if (src.size() != dst.size() || src.size() != etype.size()) {
    throw ShapeError("EdgeIndex: src/dst/etype lengths " + std::to_string(src.size()) + "/" +
                     std::to_string(dst.size()) + "/" + std::to_string(etype.size()));
  }
  for (std::size_t e = 0; e < src.size(); ++e) {
    if (src[e] >= num_nodes || dst[e] >= num_nodes) {
      throw IndexError("EdgeIndex: edge " + std::to_string(e) + " (" + std::to_string(src[e]) +
                       "->" + std::to_string(dst[e]) + ") outside " + std::to_string(num_nodes) +
                       " nodes");
    }
    if (etype[e] >= num_edge_types) {
      throw IndexError("EdgeIndex: edge " + std::to_string(e) + " has type " +
                       std::to_string(etype[e]) + " of " + std::to_string(num_edge_types));
    }
  }
}

kernels::Grouping EdgeIndex::dst_grouping(std::size_t num_nodes) const {
  return kernels::group_by(dst, num_nodes);
}

std::vector<std::size_t> EdgeIndex::in_degree(std::size_t num_nodes) const {
  std::vector<std::size_t> deg(num_nodes, 0);
  for (Index d : dst) ++deg[d];
  return deg;
}

std::vector<Index> Labels::labelled_nodes() const {
  std::vector<Index> out;
  for (Index v = 0; v < per_node.size(); ++v) {
    if (!per_node[v].empty()) out.push_back(v);
  }
  return out;
}

Index HeteroGraph::node_type_id(const std::string& name) const {
  for (Index t = 0; t < node_types.size(); ++t) {
    if (node_types[t].name == name) return t;
  }
  throw DataError("unknown node type '" + name + "'");
}

std::optional<Index> HeteroGraph::find_edge_type(const std::string& name) const {
  for (Index t = 0; t < edge_types.size(); ++t) {
    if (edge_types[t].name == name) return t;
  }
  return std::nullopt;
}

Index HeteroGraph::edge_type_id(const std::string& name) const {
  if (auto t = find_edge_type(name)) return *t;
  throw DataError("unknown edge type '" + name + "'");
}

std::optional<Index> HeteroGraph::self_edge_type() const {
  if (!edge_types.empty() && edge_types.back().name == kSelfEdgeTypeName &&
      edge_types.back().src_type == kAnyNodeType) {
    return edge_types.size() - 1;
  }
  return std::nullopt;
}

std::vector<Index> HeteroGraph::local_indices() const {
  std::vector<Index> local(node_count());
  std::vector<Index> next(num_node_types(), 0);
  for (Index v = 0; v < node_count(); ++v) local[v] = next[node_type[v]]++;
  return local;
}

std::vector<Index> HeteroGraph::nodes_of_type(Index t) const {
  std::vector<Index> out;
  for (Index v = 0; v < node_count(); ++v) {
    if (node_type[v] == t) out.push_back(v);
  }
  return out;
}

std::size_t HeteroGraph::count_edges_of_type(Index t) const {
  return static_cast<std::size_t>(std::count(edges.etype.begin(), edges.etype.end(), t));
}

void HeteroGraph::validate() const {
  if (node_types.empty()) throw DataError("graph has no node types");
  if (edge_types.empty()) throw DataError("graph has no edge types");
  std::vector<std::size_t> counts(num_node_types(), 0);
  for (Index v = 0; v < node_count(); ++v) {
    if (node_type[v] >= num_node_types()) {
      throw DataError("node " + std::to_string(v) + " has undeclared type id " +
                      std::to_string(node_type[v]));
    }
    ++counts[node_type[v]];
  }
  for (Index t = 0; t < num_node_types(); ++t) {
    if (counts[t] != node_types[t].count) {
      throw DataError("node type '" + node_types[t].name + "' declares " +
                      std::to_string(node_types[t].count) + " nodes, found " +
                      std::to_string(counts[t]));
    }
  }
  if (features.size() != num_node_types()) throw DataError("one feature block per node type required");
  for (Index t = 0; t < num_node_types(); ++t) {
    if (features[t].rows() != node_types[t].count || features[t].cols() != node_types[t].feature_dim) {
      throw DataError("feature block of '" + node_types[t].name + "' is " +
                      features[t].shape_string() + ", expected " +
                      std::to_string(node_types[t].count) + "x" +
                      std::to_string(node_types[t].feature_dim));
    }
  }
  try {
    edges.validate(node_count(), num_edge_types());
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const EdgeTypeInfo& et = edge_types[edges.etype[e]];
    if (et.src_type == kAnyNodeType) continue;
    if (node_type[edges.src[e]] != et.src_type || node_type[edges.dst[e]] != et.dst_type) {
      throw DataError("edge " + std::to_string(e) + " of type '" + et.name +
                      "' connects nodes of the wrong types");
    }
  }
  if (labels && labels->per_node.size() != node_count()) {
    throw DataError("label table size does not match node count");
  }
}

HeteroGraph add_self_loops(const HeteroGraph& graph) {
  if (graph.self_edge_type()) return graph;
  HeteroGraph out = graph;
  const Index self = out.edge_types.size();
  out.edge_types.push_back({kSelfEdgeTypeName, kAnyNodeType, kAnyNodeType, std::nullopt});
  out.edges.reserve(out.edges.size() + out.node_count());
  for (Index v = 0; v < out.node_count(); ++v) out.edges.push_back(v, v, self);
  return out;
}

HeteroGraph materialize_reverse_edges(const HeteroGraph& graph) {
  HeteroGraph out = graph;
  std::set<std::tuple<Index, Index, Index>> present;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    present.emplace(graph.edges.src[e], graph.edges.dst[e], graph.edges.etype[e]);
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& et = graph.edge_types[graph.edges.etype[e]];
    if (!et.reverse) continue;
    const Index rev = graph.edge_type_id(*et.reverse);
    const auto key = std::make_tuple(graph.edges.dst[e], graph.edges.src[e], rev);
    if (present.insert(key).second) out.edges.push_back(graph.edges.dst[e], graph.edges.src[e], rev);
  }
  return out;
}

HeteroGraph remove_edges(const HeteroGraph& graph, Index etype, const std::vector<NodePair>& pairs) {
  std::set<NodePair> drop(pairs.begin(), pairs.end());
  std::optional<Index> reverse;
  if (const auto& r = graph.edge_types.at(etype).reverse) reverse = graph.find_edge_type(*r);

  HeteroGraph out = graph;
  out.edges = EdgeIndex{};
  out.edges.reserve(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Index s = graph.edges.src[e], d = graph.edges.dst[e], t = graph.edges.etype[e];
    if (t == etype && drop.count({s, d})) continue;
    // The reverse-typed twin of a held-out edge would leak it back in.
    if (reverse && t == *reverse && drop.count({d, s})) continue;
    out.edges.push_back(s, d, t);
  }
  return out;
}

std::vector<NodePair> edges_of_type(const HeteroGraph& graph, Index etype) {
  std::vector<NodePair> out;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (graph.edges.etype[e] == etype) out.emplace_back(graph.edges.src[e], graph.edges.dst[e]);
  }
  return out;
}

}  // namespace hgb
