#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hgb/dense_matrix.hpp"
#include "hgb/kernels.hpp"
#include "json.hpp"

namespace hgb {

/// Directed edges as parallel arrays, one entry per edge.
struct EdgeIndex {
  std::vector<Index> src;
  std::vector<Index> dst;
  std::vector<Index> etype;

  std::size_t size() const { return src.size(); }
  bool empty() const { return src.empty(); }
  void push_back(Index s, Index d, Index t) {
    src.push_back(s);
    dst.push_back(d);
    etype.push_back(t);
  }
  void reserve(std::size_t n) {
    src.reserve(n);
    dst.reserve(n);
    etype.reserve(n);
  }

  // Throws IndexError / ShapeError when arrays disagree or ids are out of range.
  void validate(std::size_t num_nodes, std::size_t num_edge_types) const;
  // Edge positions grouped by destination, stable within each group.
  kernels::Grouping dst_grouping(std::size_t num_nodes) const;
  std::vector<std::size_t> in_degree(std::size_t num_nodes) const;

  friend bool operator==(const EdgeIndex&, const EdgeIndex&) = default;
};

struct NodeTypeInfo {
  std::string name;
  std::size_t count = 0;
  std::size_t feature_dim = 0;

  friend bool operator==(const NodeTypeInfo&, const NodeTypeInfo&) = default;
};

// Endpoint type of the reserved self-loop edge type: matches any node type.
inline constexpr Index kAnyNodeType = static_cast<Index>(-1);
inline constexpr const char* kSelfEdgeTypeName = "self";

struct EdgeTypeInfo {
  std::string name;
  Index src_type = 0;
  Index dst_type = 0;
  std::optional<std::string> reverse;

  friend bool operator==(const EdgeTypeInfo&, const EdgeTypeInfo&) = default;
};

/// Node labels. Unlabelled nodes have an empty class list.
struct Labels {
  std::size_t num_classes = 0;
  bool multi_label = false;
  std::vector<std::vector<Index>> per_node;

  bool has(Index v) const { return v < per_node.size() && !per_node[v].empty(); }
  std::vector<Index> labelled_nodes() const;

  friend bool operator==(const Labels&, const Labels&) = default;
};

/// Typed nodes and edges with per-type raw feature blocks. Node ids are global
/// and 0-based; feature block t holds the nodes of type t in global-id order.
struct HeteroGraph {
  std::string name;
  std::vector<NodeTypeInfo> node_types;
  std::vector<EdgeTypeInfo> edge_types;
  std::vector<Index> node_type;
  EdgeIndex edges;
  std::vector<DenseMatrix> features;
  std::optional<Labels> labels;
  // Free-form task metadata carried through from meta.json ("task" object).
  nlohmann::json task = nlohmann::json::object();

  std::size_t node_count() const { return node_type.size(); }
  std::size_t num_node_types() const { return node_types.size(); }
  std::size_t num_edge_types() const { return edge_types.size(); }

  Index node_type_id(const std::string& name) const;
  Index edge_type_id(const std::string& name) const;
  std::optional<Index> find_edge_type(const std::string& name) const;
  std::optional<Index> self_edge_type() const;

  // Position of node v within its type's feature block.
  std::vector<Index> local_indices() const;
  std::vector<Index> nodes_of_type(Index t) const;
  std::size_t count_edges_of_type(Index t) const;

  // Checks every documented invariant; throws DataError on violation.
  void validate() const;

  friend bool operator==(const HeteroGraph&, const HeteroGraph&) = default;
};

/// Adds one self-edge per node under a reserved edge type "self" whose id is
/// the current edge-type count. Idempotent.
HeteroGraph add_self_loops(const HeteroGraph& graph);

/// Adds, for every edge whose type declares a reverse type, the reversed edge
/// unless it is already present.
HeteroGraph materialize_reverse_edges(const HeteroGraph& graph);

using NodePair = std::pair<Index, Index>;

/// Copy of the graph without the listed (src, dst) pairs of edge type `etype`.
HeteroGraph remove_edges(const HeteroGraph& graph, Index etype,
                         const std::vector<NodePair>& pairs);

/// All (src, dst) pairs of the given edge type, in edge order.
std::vector<NodePair> edges_of_type(const HeteroGraph& graph, Index etype);

}  // namespace hgb
