#pragma once

// Small generated datasets with planted structure, used by the toy configs,
// the acceptance suite and tools/gen_synthetic. Each graph carries the task
// metadata (target types) that the training loops read.

#include <cstdint>
#include <string>

#include "hgb/graph.hpp"

namespace hgb {

/// paper/venue graph with `papers + venues` nodes; paper labels follow the
/// venue block they publish in. Defaults give the 20-node capacity fixture.
struct SyntheticNodeOptions {
  std::size_t papers = 16;
  std::size_t venues = 4;
  std::size_t classes = 2;
  std::size_t feature_dim = 4;
  std::uint64_t seed = 1;
};
HeteroGraph synthetic_node_graph(const SyntheticNodeOptions& opt = {});

/// author/paper/term/venue graph shaped like DBLP; authors carry one of
/// `classes` labels that papers, venues and terms correlate with.
struct SyntheticDblpOptions {
  std::size_t authors = 120;
  std::size_t papers = 240;
  std::size_t terms = 60;
  std::size_t venues = 8;
  std::size_t classes = 4;
  double noise = 0.15;  // probability an edge ignores the community structure
  std::uint64_t seed = 1;
};
HeteroGraph synthetic_dblp_graph(const SyntheticDblpOptions& opt = {});

/// user/item/tag graph with planted communities. Target relation user-item.
/// Defaults: only users carry the community signal in their features, and
/// friendships cross communities, so an item's community has to come from
/// its users through the message passing while a user's own signal survives
/// mostly through the self path. See homophilous_link_options() for the
/// variant where friends and tags share the user's community.
struct SyntheticLinkOptions {
  std::size_t users = 80;
  std::size_t items = 80;
  std::size_t tags = 40;
  std::size_t communities = 4;
  std::size_t items_per_user = 5;
  std::size_t friends_per_user = 8;
  double friend_locality = 0.0;  // probability a friendship stays in the community
  std::size_t tags_per_user = 1;  // user-tag edges inside the user's community
  double noise = 0.1;            // probability an interaction or tag ignores communities
  // Node features: a noisy community indicator of this width (0 = featureless).
  std::size_t feature_dim = 8;
  double feature_noise = 1.0;
  // Weight of the community indicator in user, item and tag features.
  double user_signal = 1.0, item_signal = 0.0, tag_signal = 0.0;
  std::uint64_t seed = 1;
};

/// Same-community friends, every type carrying the signal: items at distance
/// two from a user (friends' items, items sharing a tag) are then mostly from
/// the user's community and make harder negatives than uniform draws.
SyntheticLinkOptions homophilous_link_options(std::uint64_t seed = 1);

HeteroGraph synthetic_link_graph(const SyntheticLinkOptions& opt = {});

/// user/item/category interactions. Users prefer items of their favourite
/// categories.
struct SyntheticRecOptions {
  std::size_t users = 5;
  std::size_t items = 100;
  std::size_t categories = 5;
  std::size_t interactions_per_user = 8;
  std::uint64_t seed = 1;
};
HeteroGraph synthetic_rec_graph(const SyntheticRecOptions& opt = {});

/// "node", "dblp", "link", "link-homophilous" or "rec" with default options and the given seed.
HeteroGraph synthetic_graph(const std::string& kind, std::uint64_t seed = 1);

}  // namespace hgb
