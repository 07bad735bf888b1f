#include "hgb/preprocess.hpp"

#include <algorithm>

#include "hgb/errors.hpp"
#include "hgb/ops.hpp"

namespace hgb {

FeatureMode feature_mode_from_int(int feat, std::vector<Index> target_types) {
  if (feat < 0 || feat > 2) throw ContractError("feat must be 0, 1 or 2, got " + std::to_string(feat));
  return {static_cast<FeatureModeKind>(feat), std::move(target_types)};
}

FeatureSpec apply_feature_mode(const HeteroGraph& graph, const FeatureMode& mode) {
  if (mode.mode == FeatureModeKind::TargetOnly && mode.target_types.empty()) {
    throw ContractError("feature mode 1 needs at least one target type");
  }
  for (Index t : mode.target_types) {
    if (t >= graph.num_node_types()) throw ContractError("feature mode names unknown node type " + std::to_string(t));
  }
  FeatureSpec spec;
  for (Index t = 0; t < graph.num_node_types(); ++t) {
    const auto& info = graph.node_types[t];
    TypeFeatureSpec s{false, info.feature_dim, info.count};
    switch (mode.mode) {
      case FeatureModeKind::AllGiven: break;
      case FeatureModeKind::TargetOnly:
        s.one_hot = std::find(mode.target_types.begin(), mode.target_types.end(), t) == mode.target_types.end();
        break;
      case FeatureModeKind::AllOneHot: s.one_hot = true; break;
    }
    if (info.feature_dim == 0) s.one_hot = true;
    if (s.one_hot) s.raw_dim = 0;
    spec.push_back(s);
  }
  return spec;
}

TypedProjector::TypedProjector(ParameterStore& store, const std::string& prefix, const HeteroGraph& graph,
                               FeatureSpec spec, std::size_t d_shared, Rng& rng)
    : spec_(std::move(spec)), d_shared_(d_shared) {
  if (spec_.size() != graph.num_node_types()) {
    throw ShapeError("feature spec covers " + std::to_string(spec_.size()) + " types, graph has " +
                     std::to_string(graph.num_node_types()));
  }
  if (d_shared == 0) throw ContractError("shared feature dimension must be positive");
  for (Index t = 0; t < spec_.size(); ++t) {
    const auto& name = graph.node_types[t].name;
    members_.push_back(graph.nodes_of_type(t));
    if (spec_[t].count != members_.back().size()) {
      throw ShapeError("feature spec count mismatch for type '" + name + "'");
    }
    if (spec_[t].one_hot) {
      weight_.push_back(nullptr);
      bias_.push_back(nullptr);
      table_.push_back(spec_[t].count ? &store.add_xavier(prefix + "embed." + name, spec_[t].count, d_shared, rng)
                                      : nullptr);
    } else {
      weight_.push_back(&store.add_xavier(prefix + "proj." + name + ".W", spec_[t].raw_dim, d_shared, rng));
      bias_.push_back(&store.add_zeros(prefix + "proj." + name + ".b", 1, d_shared));
      table_.push_back(nullptr);
    }
  }
}

Var TypedProjector::project(Tape& tape, const HeteroGraph& graph) const {
  const std::size_t n = graph.node_count();
  Var out;
  for (Index t = 0; t < spec_.size(); ++t) {
    if (members_[t].empty()) continue;
    Var block;
    if (spec_[t].one_hot) {
      block = tape.parameter(*table_[t]);
    } else {
      const auto& x = graph.features.at(t);
      if (x.rows() != spec_[t].count || x.cols() != spec_[t].raw_dim) {
        throw ShapeError("features of type '" + graph.node_types[t].name + "' are " + x.shape_string() +
                         ", projector expects " + std::to_string(spec_[t].count) + "x" +
                         std::to_string(spec_[t].raw_dim));
      }
      block = ops::add_row(ops::matmul(tape.constant(x), tape.parameter(*weight_[t])), tape.parameter(*bias_[t]));
    }
    Var placed = ops::scatter_rows(block, members_[t], n);
    out = out.valid() ? ops::add(out, placed) : placed;
  }
  if (!out.valid()) out = tape.constant(DenseMatrix(n, d_shared_));
  return out;
}

}  // namespace hgb
