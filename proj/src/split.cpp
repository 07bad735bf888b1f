#include "hgb/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hgb/errors.hpp"
#include "hgb/rng.hpp"

namespace hgb {

using nlohmann::json;

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Node: return "node";
    case TaskKind::Link: return "link";
    case TaskKind::Rec: return "rec";
  }
  return "node";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "node") return TaskKind::Node;
  if (s == "link") return TaskKind::Link;
  if (s == "rec") return TaskKind::Rec;
  throw ContractError("unknown task kind '" + s + "' (expected node, link or rec)");
}

namespace {

json pairs_to_json(const std::vector<NodePair>& pairs) {
  json a = json::array();
  for (const auto& [u, v] : pairs) a.push_back({u, v});
  return a;
}

std::vector<NodePair> pairs_from_json(const json& j, const char* key) {
  std::vector<NodePair> out;
  if (!j.contains(key)) return out;
  for (const auto& p : j.at(key)) out.emplace_back(p.at(0).get<Index>(), p.at(1).get<Index>());
  return out;
}

std::vector<Index> ids_from_json(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<Index>>();
}

void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.valid < 0 || r.test < 0) throw ContractError("split ratios must be non-negative");
  if (std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
    throw ContractError("split ratios must sum to 1");
  }
}

struct Counts {
  std::size_t train, valid, test;
};

Counts partition_counts(std::size_t n, const SplitRatios& r) {
  auto train = static_cast<std::size_t>(std::llround(r.train * static_cast<double>(n)));
  auto valid = static_cast<std::size_t>(std::llround(r.valid * static_cast<double>(n)));
  train = std::min(train, n);
  valid = std::min(valid, n - train);
  return {train, valid, n - train - valid};
}

template <typename T>
void partition(const std::vector<T>& items, const Counts& c, std::vector<T>& train,
               std::vector<T>& valid, std::vector<T>& test) {
  train.assign(items.begin(), items.begin() + c.train);
  valid.assign(items.begin() + c.train, items.begin() + c.train + c.valid);
  test.assign(items.begin() + c.train + c.valid, items.end());
}

}  // namespace

json split_to_json(const SplitSpec& spec) {
  json j;
  j["task"] = to_string(spec.task);
  j["seed"] = spec.seed;
  if (spec.task == TaskKind::Node) {
    j["train"] = spec.train_nodes;
    j["valid"] = spec.valid_nodes;
    j["test"] = spec.test_nodes;
  } else {
    j["train"] = pairs_to_json(spec.train_pairs);
    j["valid"] = pairs_to_json(spec.valid_pairs);
    j["test"] = pairs_to_json(spec.test_pairs);
    j["valid_negatives"] = pairs_to_json(spec.valid_negatives);
    j["test_negatives"] = pairs_to_json(spec.test_negatives);
  }
  if (spec.target_edge_type) j["target_edge_type"] = *spec.target_edge_type;
  return j;
}

SplitSpec split_from_json(const json& j) {
  SplitSpec spec;
  try {
    spec.task = task_kind_from_string(j.at("task").get<std::string>());
    spec.seed = j.value("seed", std::uint64_t{0});
    if (spec.task == TaskKind::Node) {
      spec.train_nodes = ids_from_json(j, "train");
      spec.valid_nodes = ids_from_json(j, "valid");
      spec.test_nodes = ids_from_json(j, "test");
    } else {
      spec.train_pairs = pairs_from_json(j, "train");
      spec.valid_pairs = pairs_from_json(j, "valid");
      spec.test_pairs = pairs_from_json(j, "test");
      spec.valid_negatives = pairs_from_json(j, "valid_negatives");
      spec.test_negatives = pairs_from_json(j, "test_negatives");
    }
    if (j.contains("target_edge_type")) spec.target_edge_type = j.at("target_edge_type").get<Index>();
  } catch (const json::exception& e) {
    throw DataError(std::string("split file: ") + e.what());
  }
  return spec;
}

SplitSpec split_nodes(const HeteroGraph& graph, SplitRatios ratios, std::uint64_t seed,
                      std::optional<Index> target_type) {
  check_ratios(ratios);
  if (!graph.labels) throw ContractError("split_nodes: graph has no labels");
  std::vector<Index> nodes;
  for (Index v : graph.labels->labelled_nodes()) {
    if (!target_type || graph.node_type[v] == *target_type) nodes.push_back(v);
  }
  if (nodes.empty()) throw ContractError("split_nodes: no labelled nodes of the target type");

  Rng rng(seed);
  rng.shuffle(std::span<Index>(nodes));
  SplitSpec spec;
  spec.task = TaskKind::Node;
  spec.seed = seed;
  partition(nodes, partition_counts(nodes.size(), ratios), spec.train_nodes, spec.valid_nodes,
            spec.test_nodes);
  return spec;
}

EdgeSplit split_edges(const HeteroGraph& graph, Index target_etype, SplitRatios ratios,
                      std::uint64_t seed) {
  check_ratios(ratios);
  if (target_etype >= graph.num_edge_types()) {
    throw ContractError("split_edges: target edge type " + std::to_string(target_etype) +
                        " does not exist");
  }
  auto pairs = edges_of_type(graph, target_etype);
  const auto& rev = graph.edge_types[target_etype].reverse;
  if (rev && *rev == graph.edge_types[target_etype].name) {
    // Self-reverse (symmetric) type: split unordered pairs so u->v and v->u
    // never land in different partitions.
    for (auto& [u, v] : pairs) {
      if (v < u) std::swap(u, v);
    }
  }
  // Parallel duplicate edges would straddle partitions.
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  if (pairs.size() < 10) {
    throw ContractError("split_edges: need at least 10 target edges, found " +
                        std::to_string(pairs.size()));
  }
  Rng rng(seed);
  rng.shuffle(std::span<NodePair>(pairs));

  EdgeSplit out;
  out.spec.task = TaskKind::Link;
  out.spec.seed = seed;
  out.spec.target_edge_type = target_etype;
  partition(pairs, partition_counts(pairs.size(), ratios), out.spec.train_pairs,
            out.spec.valid_pairs, out.spec.test_pairs);

  std::vector<NodePair> held_out = out.spec.valid_pairs;
  held_out.insert(held_out.end(), out.spec.test_pairs.begin(), out.spec.test_pairs.end());
  out.train_graph = remove_edges(graph, target_etype, held_out);
  return out;
}

SplitSpec split_interactions(std::span<const NodePair> user_item_pairs, double ratio_test,
                             std::uint64_t seed) {
  if (user_item_pairs.empty()) throw ContractError("split_interactions: empty interaction list");
  if (ratio_test < 0.0 || ratio_test > 1.0) throw ContractError("split_interactions: ratio outside [0,1]");

  std::map<Index, std::vector<Index>> by_user;
  for (const auto& [u, i] : user_item_pairs) by_user[u].push_back(i);

  Rng rng(seed);
  SplitSpec spec;
  spec.task = TaskKind::Rec;
  spec.seed = seed;
  for (auto& [user, items] : by_user) {
    rng.shuffle(std::span<Index>(items));
    const std::size_t n = items.size();
    auto n_test = static_cast<std::size_t>(std::llround(ratio_test * static_cast<double>(n)));
    if (n_test >= n) n_test = n - 1;
    for (std::size_t k = 0; k < n; ++k) {
      (k < n_test ? spec.test_pairs : spec.train_pairs).emplace_back(user, items[k]);
    }
  }
  return spec;
}

}  // namespace hgb
