#pragma once

// Small hand-built graphs shared by the unit tests.

#include <string>
#include <vector>

#include "hgb/graph.hpp"
#include "hgb/rng.hpp"

namespace fixture {

using hgb::HeteroGraph;
using hgb::Index;

struct EdgeSpec {
  std::string name, src, dst;
  std::string reverse;  // empty: none
};

// Nodes are numbered type by type in the order given; features are zero-filled
// blocks of the declared width.
HeteroGraph make_graph(const std::vector<hgb::NodeTypeInfo>& node_types,
                       const std::vector<EdgeSpec>& edge_types);

void add_edge(HeteroGraph& g, Index s, Index d, const std::string& etype);

// Authors, papers, terms, venues with the six directed relations between them,
// random features and author labels.
HeteroGraph dblp_shaped(hgb::Rng& rng, std::size_t authors = 12, std::size_t papers = 20,
                        std::size_t terms = 8, std::size_t venues = 3);

// Random graph: node types drawn uniformly, one edge type per ordered
// (src type, dst type) combination, each candidate edge kept with probability p.
HeteroGraph random_typed(hgb::Rng& rng, std::size_t nodes, std::size_t node_types, double p);

}  // namespace fixture

namespace fixture {

// 6 nodes over 3 node types and 4 edge types, random features, 3 classes.
hgb::HeteroGraph toy_six(hgb::Rng& rng);

}  // namespace fixture
