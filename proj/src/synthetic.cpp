#include "hgb/synthetic.hpp"

#include <set>

#include "hgb/errors.hpp"
#include "hgb/rng.hpp"

namespace hgb {

namespace {

struct TypeDecl {
  std::string name;
  std::size_t count;
  std::size_t dim;
};

struct RelDecl {
  std::string name, src, dst, reverse;
};

HeteroGraph skeleton(const std::string& name, const std::vector<TypeDecl>& types, const std::vector<RelDecl>& rels) {
  HeteroGraph g;
  g.name = name;
  for (Index t = 0; t < types.size(); ++t) {
    g.node_types.push_back({types[t].name, types[t].count, types[t].dim});
    g.node_type.insert(g.node_type.end(), types[t].count, t);
    g.features.emplace_back(types[t].count, types[t].dim);
  }
  for (const auto& r : rels) {
    EdgeTypeInfo info{r.name, g.node_type_id(r.src), g.node_type_id(r.dst), std::nullopt};
    if (!r.reverse.empty()) info.reverse = r.reverse;
    g.edge_types.push_back(info);
  }
  return g;
}

// Adds s->d under `rel` and d->s under its declared reverse, skipping duplicates.
class EdgeAdder {
 public:
  explicit EdgeAdder(HeteroGraph& g) : g_(g) {}
  void add(Index s, Index d, const std::string& rel) {
    const Index t = g_.edge_type_id(rel);
    put(s, d, t);
    if (const auto& rev = g_.edge_types[t].reverse) put(d, s, g_.edge_type_id(*rev));
  }

 private:
  void put(Index s, Index d, Index t) {
    if (seen_.insert({s, d, t}).second) g_.edges.push_back(s, d, t);
  }
  HeteroGraph& g_;
  std::set<std::tuple<Index, Index, Index>> seen_;
};

void gaussianish(DenseMatrix& m, Rng& rng, double scale) {
  // Sum of uniforms: cheap, deterministic, roughly normal.
  for (double& v : m.values()) v = scale * (rng.uniform() + rng.uniform() + rng.uniform() - 1.5);
}

Index pick_in_block(Rng& rng, std::size_t block, std::size_t blocks, std::size_t count) {
  // Members of block b are the ids congruent to b modulo blocks.
  const std::size_t size = (count - block + blocks - 1) / blocks;
  return static_cast<Index>(block + blocks * rng.below(size));
}

}  // namespace

HeteroGraph synthetic_node_graph(const SyntheticNodeOptions& opt) {
  if (opt.classes == 0 || opt.venues < opt.classes || opt.papers < opt.classes) {
    throw ContractError("synthetic node graph needs papers, venues >= classes > 0");
  }
  Rng rng(opt.seed);
  auto g = skeleton("synthetic-node", {{"paper", opt.papers, opt.feature_dim}, {"venue", opt.venues, 0}},
                    {{"paper-venue", "paper", "venue", "venue-paper"}, {"venue-paper", "venue", "paper", "paper-venue"}});
  gaussianish(g.features[0], rng, 1.0);
  EdgeAdder add(g);
  Labels labels;
  labels.num_classes = opt.classes;
  labels.per_node.assign(g.node_count(), {});
  for (Index p = 0; p < opt.papers; ++p) {
    const Index c = p % opt.classes;
    labels.per_node[p] = {c};
    add.add(p, opt.papers + pick_in_block(rng, c, opt.classes, opt.venues), "paper-venue");
  }
  g.labels = labels;
  g.task = {{"kind", "node"}, {"target_type", "paper"}};
  return g;
}

HeteroGraph synthetic_dblp_graph(const SyntheticDblpOptions& opt) {
  const std::size_t C = opt.classes;
  if (C == 0 || opt.venues < C || opt.terms < C || opt.papers < C || opt.authors < C) {
    throw ContractError("synthetic dblp graph needs at least one node of each type per class");
  }
  Rng rng(opt.seed);
  auto g = skeleton("synthetic-dblp",
                    {{"author", opt.authors, 8}, {"paper", opt.papers, 8}, {"term", opt.terms, 0}, {"venue", opt.venues, 0}},
                    {{"author-paper", "author", "paper", "paper-author"},
                     {"paper-author", "paper", "author", "author-paper"},
                     {"paper-term", "paper", "term", "term-paper"},
                     {"term-paper", "term", "paper", "paper-term"},
                     {"paper-venue", "paper", "venue", "venue-paper"},
                     {"venue-paper", "venue", "paper", "paper-venue"}});
  gaussianish(g.features[0], rng, 1.0);
  gaussianish(g.features[1], rng, 1.0);
  const Index p0 = opt.authors, t0 = p0 + opt.papers, v0 = t0 + opt.terms;
  EdgeAdder add(g);
  auto block = [&](std::size_t c) { return rng.uniform() < opt.noise ? rng.below(C) : c; };
  for (Index p = 0; p < opt.papers; ++p) {
    const std::size_t c = p % C;
    const Index paper = p0 + p;
    add.add(paper, v0 + pick_in_block(rng, block(c), C, opt.venues), "paper-venue");
    for (int k = 0; k < 2; ++k) add.add(paper, t0 + pick_in_block(rng, block(c), C, opt.terms), "paper-term");
    const std::size_t n_auth = 1 + rng.below(3);
    for (std::size_t k = 0; k < n_auth; ++k) add.add(pick_in_block(rng, block(c), C, opt.authors), paper, "author-paper");
  }
  // Every author writes at least one paper of their own class.
  for (Index a = 0; a < opt.authors; ++a) add.add(a, p0 + pick_in_block(rng, a % C, C, opt.papers), "author-paper");
  Labels labels;
  labels.num_classes = C;
  labels.per_node.assign(g.node_count(), {});
  for (Index a = 0; a < opt.authors; ++a) labels.per_node[a] = {a % C};
  g.labels = labels;
  g.task = {{"kind", "node"}, {"target_type", "author"}};
  return g;
}

HeteroGraph synthetic_link_graph(const SyntheticLinkOptions& opt) {
  const std::size_t C = opt.communities;
  if (C == 0 || opt.users < C || opt.items < C || opt.tags < C) {
    throw ContractError("synthetic link graph needs at least one node of each type per community");
  }
  Rng rng(opt.seed);
  const std::size_t F = opt.feature_dim;
  auto g = skeleton("synthetic-link", {{"user", opt.users, F}, {"item", opt.items, F}, {"tag", opt.tags, F}},
                    {{"user-item", "user", "item", "item-user"},
                     {"item-user", "item", "user", "user-item"},
                     {"user-user", "user", "user", "user-user"},
                     {"item-tag", "item", "tag", "tag-item"},
                     {"tag-item", "tag", "item", "item-tag"},
                     {"user-tag", "user", "tag", "tag-user"},
                     {"tag-user", "tag", "user", "user-tag"}});
  const Index i0 = opt.users, t0 = i0 + opt.items;
  EdgeAdder add(g);
  auto block = [&](std::size_t c) { return rng.uniform() < opt.noise ? rng.below(C) : c; };
  for (Index u = 0; u < opt.users; ++u) {
    const std::size_t c = u % C;
    for (std::size_t k = 0; k < opt.items_per_user; ++k) add.add(u, i0 + pick_in_block(rng, block(c), C, opt.items), "user-item");
    for (std::size_t k = 0; k < opt.friends_per_user; ++k) {
      const std::size_t fc = rng.uniform() < opt.friend_locality ? c : rng.below(C);
      const Index f = pick_in_block(rng, fc, C, opt.users);
      if (f != u) add.add(u, f, "user-user");
    }
    for (std::size_t k = 0; k < opt.tags_per_user; ++k) add.add(u, t0 + pick_in_block(rng, c, C, opt.tags), "user-tag");
  }
  for (Index i = 0; i < opt.items; ++i) {
    add.add(i0 + i, t0 + pick_in_block(rng, block(i % C), C, opt.tags), "item-tag");
  }
  if (F > 0) {
    const double signal[3] = {opt.user_signal, opt.item_signal, opt.tag_signal};
    for (std::size_t t = 0; t < 3; ++t) {
      auto& block = g.features[t];
      gaussianish(block, rng, opt.feature_noise);
      for (std::size_t r = 0; r < block.rows(); ++r) block(r, (r % C) % F) += signal[t];
    }
  }
  g.task = {{"kind", "link"}, {"target_edge_type", "user-item"}};
  return g;
}

SyntheticLinkOptions homophilous_link_options(std::uint64_t seed) {
  SyntheticLinkOptions o;
  o.friends_per_user = 3;
  o.friend_locality = 0.5;
  o.tags_per_user = 0;
  o.item_signal = o.tag_signal = 1.0;
  o.seed = seed;
  return o;
}

HeteroGraph synthetic_rec_graph(const SyntheticRecOptions& opt) {
  if (opt.categories == 0 || opt.items < opt.categories || opt.users == 0) {
    throw ContractError("synthetic rec graph needs users and at least one item per category");
  }
  Rng rng(opt.seed);
  auto g = skeleton("synthetic-rec",
                    {{"user", opt.users, 0}, {"item", opt.items, 0}, {"category", opt.categories, 0}},
                    {{"user-item", "user", "item", "item-user"},
                     {"item-user", "item", "user", "user-item"},
                     {"item-category", "item", "category", "category-item"},
                     {"category-item", "category", "item", "item-category"}});
  const Index i0 = opt.users, c0 = i0 + opt.items;
  const std::size_t C = opt.categories;
  EdgeAdder add(g);
  for (Index i = 0; i < opt.items; ++i) add.add(i0 + i, c0 + i % C, "item-category");
  for (Index u = 0; u < opt.users; ++u) {
    std::set<Index> chosen;
    const std::size_t fav = u % C;
    const std::size_t want = std::min(opt.interactions_per_user, opt.items);
    while (chosen.size() < want) {
      const std::size_t cat = rng.uniform() < 0.8 ? fav : rng.below(C);
      chosen.insert(pick_in_block(rng, cat, C, opt.items));
    }
    for (Index i : chosen) add.add(u, i0 + i, "user-item");
  }
  g.task = {{"kind", "rec"}, {"user_type", "user"}, {"item_type", "item"}, {"interaction_edge_type", "user-item"}};
  return g;
}

HeteroGraph synthetic_graph(const std::string& kind, std::uint64_t seed) {
  if (kind == "node") return synthetic_node_graph({.seed = seed});
  if (kind == "dblp") return synthetic_dblp_graph({.seed = seed});
  if (kind == "link") return synthetic_link_graph({.seed = seed});
  if (kind == "link-homophilous") return synthetic_link_graph(homophilous_link_options(seed));
  if (kind == "rec") return synthetic_rec_graph({.seed = seed});
  throw ContractError("unknown synthetic dataset '" + kind + "' (expected node, dblp, link, link-homophilous or rec)");
}

}  // namespace hgb
