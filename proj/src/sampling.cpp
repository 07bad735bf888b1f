#include "hgb/sampling.hpp"

#include <algorithm>

#include "hgb/errors.hpp"
#include "hgb/log.hpp"

namespace hgb {

NegativeSampler::NegativeSampler(const HeteroGraph& structure, Index target_etype,
                                 std::span<const NodePair> extra_positives)
    : n_(structure.node_count()) {
  if (target_etype >= structure.num_edge_types()) {
    throw ContractError("negative sampling: unknown target edge type " + std::to_string(target_etype));
  }
  tail_type_ = structure.edge_types[target_etype].dst_type;
  if (tail_type_ == kAnyNodeType) throw ContractError("negative sampling: target may not be the self-loop type");
  tails_ = structure.nodes_of_type(tail_type_);
  node_type_ = structure.node_type;

  const auto self = structure.self_edge_type();
  offsets_.assign(n_ + 1, 0);
  for (std::size_t e = 0; e < structure.edges.size(); ++e) {
    const Index s = structure.edges.src[e], d = structure.edges.dst[e], t = structure.edges.etype[e];
    if (t == target_etype) positives_.insert(key(s, d));
    if ((self && t == *self) || s == d) continue;
    ++offsets_[s + 1];
    ++offsets_[d + 1];
  }
  for (std::size_t v = 0; v < n_; ++v) offsets_[v + 1] += offsets_[v];
  neighbours_.resize(offsets_[n_]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t e = 0; e < structure.edges.size(); ++e) {
    const Index s = structure.edges.src[e], d = structure.edges.dst[e], t = structure.edges.etype[e];
    if ((self && t == *self) || s == d) continue;
    neighbours_[fill[s]++] = d;
    neighbours_[fill[d]++] = s;
  }
  for (const auto& [u, w] : extra_positives) {
    if (u >= n_ || w >= n_) throw IndexError("negative sampling: positive pair out of range");
    positives_.insert(key(u, w));
  }
}

bool NegativeSampler::is_positive(Index u, Index w) const { return positives_.count(key(u, w)) > 0; }

const std::vector<Index>& NegativeSampler::two_hop_candidates(Index u) {
  if (auto it = cache_.find(u); it != cache_.end()) return it->second;
  if (u >= n_) throw IndexError("negative sampling: head " + std::to_string(u) + " out of range");
  scratch_.resize(n_, 0);
  std::vector<Index> touched{u};
  scratch_[u] = 1;
  for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) {
    if (!scratch_[neighbours_[k]]) {
      scratch_[neighbours_[k]] = 1;
      touched.push_back(neighbours_[k]);
    }
  }
  std::vector<Index> out;
  for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) {
    const Index x = neighbours_[k];
    for (std::size_t j = offsets_[x]; j < offsets_[x + 1]; ++j) {
      const Index w = neighbours_[j];
      if (scratch_[w]) continue;
      scratch_[w] = 1;
      touched.push_back(w);
      if (node_type_[w] == tail_type_ && !is_positive(u, w)) out.push_back(w);
    }
  }
  for (Index v : touched) scratch_[v] = 0;
  std::sort(out.begin(), out.end());
  return cache_.emplace(u, std::move(out)).first->second;
}

Index NegativeSampler::uniform_tail(Index u, Rng& rng) {
  if (!tails_.empty()) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Index w = tails_[rng.below(tails_.size())];
      if (w != u && !is_positive(u, w)) return w;
    }
  }
  std::vector<Index> eligible;
  for (Index w : tails_) {
    if (w != u && !is_positive(u, w)) eligible.push_back(w);
  }
  if (eligible.empty()) {
    throw ContractError("negative sampling: no eligible tail node for head " + std::to_string(u));
  }
  return eligible[rng.below(eligible.size())];
}

std::vector<NodePair> NegativeSampler::two_hop(std::span<const NodePair> positives, std::uint64_t seed,
                                               std::size_t per_positive) {
  if (positives.empty()) throw ContractError("negative sampling: no positives given");
  Rng rng(seed);
  std::vector<NodePair> out;
  out.reserve(positives.size() * per_positive);
  last_fallbacks_ = 0;
  for (const auto& [u, unused] : positives) {
    (void)unused;
    const auto& cands = two_hop_candidates(u);
    if (cands.empty()) ++last_fallbacks_;
    for (std::size_t k = 0; k < per_positive; ++k) {
      const Index w = cands.empty() ? uniform_tail(u, rng) : cands[rng.below(cands.size())];
      out.emplace_back(u, w);
    }
  }
  if (last_fallbacks_ > 0) {
    log_info("2-hop negative sampling: " + std::to_string(last_fallbacks_) + " of " +
             std::to_string(positives.size()) + " heads had no 2-hop candidate; used uniform tails");
  }
  return out;
}

std::vector<NodePair> NegativeSampler::random(std::span<const NodePair> positives, std::uint64_t seed,
                                              std::size_t per_positive) {
  if (positives.empty()) throw ContractError("negative sampling: no positives given");
  Rng rng(seed);
  std::vector<NodePair> out;
  out.reserve(positives.size() * per_positive);
  for (const auto& [u, unused] : positives) {
    (void)unused;
    for (std::size_t k = 0; k < per_positive; ++k) out.emplace_back(u, uniform_tail(u, rng));
  }
  return out;
}

std::vector<NodePair> two_hop_negatives(const HeteroGraph& graph, Index target_etype,
                                        std::span<const NodePair> positives, std::uint64_t seed,
                                        std::size_t count_per_positive) {
  NegativeSampler sampler(graph, target_etype, positives);
  return sampler.two_hop(positives, seed, count_per_positive);
}

std::vector<NodePair> random_negatives(const HeteroGraph& graph, Index target_etype,
                                       std::span<const NodePair> positives, std::uint64_t seed,
                                       std::size_t count_per_positive) {
  NegativeSampler sampler(graph, target_etype, positives);
  return sampler.random(positives, seed, count_per_positive);
}

}  // namespace hgb
