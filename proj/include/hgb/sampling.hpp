#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hgb/graph.hpp"
#include "hgb/rng.hpp"

namespace hgb {

/// Negative tails for link prediction. Hop structure is taken from `structure`
/// (undirected, self-loop edges ignored); a pair counts as positive when it is
/// an edge of the target type in `structure` or appears in `extra_positives`.
/// Tails are restricted to the target edge type's dst node type.
class NegativeSampler {
 public:
  NegativeSampler(const HeteroGraph& structure, Index target_etype,
                  std::span<const NodePair> extra_positives = {});

  /// For every positive (u, .), per_positive pairs (u, w) with w at distance
  /// exactly 2 from u. Heads without such a w fall back to uniform sampling.
  std::vector<NodePair> two_hop(std::span<const NodePair> positives, std::uint64_t seed,
                                std::size_t per_positive = 1);

  /// Uniform tails with positive exclusion.
  std::vector<NodePair> random(std::span<const NodePair> positives, std::uint64_t seed,
                               std::size_t per_positive = 1);

  bool is_positive(Index u, Index w) const;
  Index tail_type() const { return tail_type_; }
  // Distance-2 tails of u that are not positives, sorted. Cached.
  const std::vector<Index>& two_hop_candidates(Index u);
  // Number of heads that fell back to uniform sampling in the last two_hop call.
  std::size_t last_fallbacks() const { return last_fallbacks_; }

 private:
  Index uniform_tail(Index u, Rng& rng);
  std::uint64_t key(Index u, Index w) const { return static_cast<std::uint64_t>(u) * n_ + w; }

  std::size_t n_;
  Index tail_type_;
  std::vector<std::size_t> offsets_;
  std::vector<Index> neighbours_;
  std::vector<Index> tails_;
  std::vector<Index> node_type_;
  std::vector<char> scratch_;
  std::unordered_set<std::uint64_t> positives_;
  std::unordered_map<Index, std::vector<Index>> cache_;
  std::size_t last_fallbacks_ = 0;
};

std::vector<NodePair> two_hop_negatives(const HeteroGraph& graph, Index target_etype,
                                        std::span<const NodePair> positives, std::uint64_t seed,
                                        std::size_t count_per_positive = 1);

std::vector<NodePair> random_negatives(const HeteroGraph& graph, Index target_etype,
                                       std::span<const NodePair> positives, std::uint64_t seed,
                                       std::size_t count_per_positive = 1);

}  // namespace hgb
