#include "support/fixtures.hpp"

namespace fixture {

HeteroGraph make_graph(const std::vector<hgb::NodeTypeInfo>& node_types,
                       const std::vector<EdgeSpec>& edge_types) {
  HeteroGraph g;
  g.name = "fixture";
  g.node_types = node_types;
  for (Index t = 0; t < node_types.size(); ++t) {
    g.node_type.insert(g.node_type.end(), node_types[t].count, t);
    g.features.emplace_back(node_types[t].count, node_types[t].feature_dim);
  }
  for (const auto& e : edge_types) {
    hgb::EdgeTypeInfo info{e.name, g.node_type_id(e.src), g.node_type_id(e.dst), std::nullopt};
    if (!e.reverse.empty()) info.reverse = e.reverse;
    g.edge_types.push_back(info);
  }
  return g;
}

void add_edge(HeteroGraph& g, Index s, Index d, const std::string& etype) {
  g.edges.push_back(s, d, g.edge_type_id(etype));
}

HeteroGraph dblp_shaped(hgb::Rng& rng, std::size_t authors, std::size_t papers, std::size_t terms,
                        std::size_t venues) {
  auto g = make_graph({{"author", authors, 5}, {"paper", papers, 4}, {"term", terms, 0}, {"venue", venues, 0}},
                      {{"author-paper", "author", "paper", "paper-author"},
                       {"paper-author", "paper", "author", "author-paper"},
                       {"paper-term", "paper", "term", "term-paper"},
                       {"term-paper", "term", "paper", "paper-term"},
                       {"paper-venue", "paper", "venue", "venue-paper"},
                       {"venue-paper", "venue", "paper", "paper-venue"}});
  for (auto& block : g.features)
    for (double& v : block.values()) v = rng.uniform(-1.0, 1.0) / 3.0;
  const Index p0 = authors, t0 = authors + papers, v0 = authors + papers + terms;
  for (Index p = 0; p < papers; ++p) {
    const Index paper = p0 + p;
    const Index a1 = rng.below(authors), a2 = rng.below(authors);
    add_edge(g, a1, paper, "author-paper");
    add_edge(g, paper, a1, "paper-author");
    if (a2 != a1) {
      add_edge(g, a2, paper, "author-paper");
      add_edge(g, paper, a2, "paper-author");
    }
    const Index t = t0 + rng.below(terms);
    add_edge(g, paper, t, "paper-term");
    add_edge(g, t, paper, "term-paper");
    const Index v = v0 + rng.below(venues);
    add_edge(g, paper, v, "paper-venue");
    add_edge(g, v, paper, "venue-paper");
  }
  hgb::Labels labels;
  labels.num_classes = 4;
  labels.per_node.assign(g.node_count(), {});
  for (Index a = 0; a < authors; ++a) labels.per_node[a] = {static_cast<Index>(rng.below(4))};
  g.labels = labels;
  return g;
}

HeteroGraph random_typed(hgb::Rng& rng, std::size_t nodes, std::size_t node_types, double p) {
  std::vector<hgb::NodeTypeInfo> types;
  std::vector<Index> assignment(nodes);
  std::vector<std::size_t> counts(node_types, 0);
  for (auto& t : assignment) {
    t = rng.below(node_types);
    ++counts[t];
  }
  for (Index t = 0; t < node_types; ++t) types.push_back({"t" + std::to_string(t), counts[t], 0});
  std::vector<EdgeSpec> etypes;
  for (Index a = 0; a < node_types; ++a)
    for (Index b = 0; b < node_types; ++b)
      etypes.push_back({"t" + std::to_string(a) + "-t" + std::to_string(b), "t" + std::to_string(a),
                        "t" + std::to_string(b), ""});
  auto g = make_graph(types, etypes);
  // make_graph numbers nodes type by type; draw edges over that layout.
  for (Index s = 0; s < g.node_count(); ++s)
    for (Index d = 0; d < g.node_count(); ++d) {
      if (s == d || rng.uniform() >= p) continue;
      g.edges.push_back(s, d, g.node_type[s] * node_types + g.node_type[d]);
    }
  return g;
}

}  // namespace fixture

namespace fixture {

HeteroGraph toy_six(hgb::Rng& rng) {
  auto g = make_graph({{"a", 2, 3}, {"b", 2, 2}, {"c", 2, 4}},
                      {{"a-b", "a", "b", ""}, {"b-a", "b", "a", ""}, {"b-c", "b", "c", ""}, {"c-a", "c", "a", ""}});
  for (auto& block : g.features)
    for (double& v : block.values()) v = rng.uniform(-1.0, 1.0);
  add_edge(g, 0, 2, "a-b");
  add_edge(g, 1, 3, "a-b");
  add_edge(g, 2, 1, "b-a");
  add_edge(g, 3, 0, "b-a");
  add_edge(g, 2, 4, "b-c");
  add_edge(g, 3, 5, "b-c");
  add_edge(g, 4, 0, "c-a");
  add_edge(g, 5, 1, "c-a");
  add_edge(g, 5, 0, "c-a");
  hgb::Labels labels;
  labels.num_classes = 3;
  labels.per_node = {{0}, {1}, {2}, {0}, {1}, {2}};
  g.labels = labels;
  return g;
}

}  // namespace fixture
