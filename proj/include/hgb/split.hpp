#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "hgb/graph.hpp"

namespace hgb {

enum class TaskKind { Node, Link, Rec };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

struct SplitRatios {
  double train = 0.0;
  double valid = 0.0;
  double test = 0.0;
};

// Node classification: 24/6/70 over labelled target nodes.
inline constexpr SplitRatios kNodeSplitRatios{0.24, 0.06, 0.70};
// Link prediction: 81/9/10 over target-type edges.
inline constexpr SplitRatios kEdgeSplitRatios{0.81, 0.09, 0.10};
// Recommendation: 20% of each user's interactions held out for test.
inline constexpr double kInteractionTestRatio = 0.20;

/// Train/valid/test partition for one task. Node tasks fill the *_nodes lists;
/// link and recommendation tasks fill the *_pairs lists (head, tail) and,
/// optionally, negatives.
struct SplitSpec {
  TaskKind task = TaskKind::Node;
  std::uint64_t seed = 0;
  std::vector<Index> train_nodes, valid_nodes, test_nodes;
  std::vector<NodePair> train_pairs, valid_pairs, test_pairs;
  std::vector<NodePair> valid_negatives, test_negatives;
  std::optional<Index> target_edge_type;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

nlohmann::json split_to_json(const SplitSpec& spec);
SplitSpec split_from_json(const nlohmann::json& j);

/// Shuffles the labelled nodes (restricted to target_type when given) and
/// partitions them; every edge stays visible (transductive setting).
SplitSpec split_nodes(const HeteroGraph& graph, SplitRatios ratios, std::uint64_t seed,
                      std::optional<Index> target_type = std::nullopt);

struct EdgeSplit {
  HeteroGraph train_graph;
  SplitSpec spec;
};

/// Partitions the edges of target_etype. train_graph keeps only the training
/// edges of that type (and drops the reverse-typed twins of held-out edges);
/// all other edge types are untouched.
EdgeSplit split_edges(const HeteroGraph& graph, Index target_etype, SplitRatios ratios,
                      std::uint64_t seed);

/// Per user (first element of each pair), round(ratio * n) interactions go to
/// test, never emptying the user's training set.
SplitSpec split_interactions(std::span<const NodePair> user_item_pairs, double ratio_test,
                             std::uint64_t seed);

}  // namespace hgb
