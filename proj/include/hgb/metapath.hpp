#pragma once

#include <string>
#include <vector>

#include "hgb/graph.hpp"

namespace hgb {

/// Ordered edge types; the endpoint node types follow from the edge types.
struct MetaPath {
  std::vector<Index> steps;

  friend bool operator==(const MetaPath&, const MetaPath&) = default;
};

MetaPath metapath_from_names(const HeteroGraph& graph, const std::vector<std::string>& edge_type_names);

/// Throws ContractError unless each step's dst type equals the next step's
/// src type.
void check_metapath(const HeteroGraph& graph, const MetaPath& path);

/// u -> v iff at least one instance of the path connects them. Existence only:
/// no multiplicities. Edges are sorted by (src, dst) and carry etype 0.
EdgeIndex metapath_neighbor_graph(const HeteroGraph& graph, const MetaPath& path);

std::string to_string(const HeteroGraph& graph, const MetaPath& path);

}  // namespace hgb
