#pragma once

#include <string>
#include <vector>

#include "hgb/graph.hpp"
#include "hgb/parameters.hpp"
#include "hgb/tape.hpp"

namespace hgb {

enum class FeatureModeKind { AllGiven = 0, TargetOnly = 1, AllOneHot = 2 };

/// feat=0 keeps every raw feature, feat=1 keeps only target_types, feat=2
/// replaces every type by a learned per-node embedding.
struct FeatureMode {
  FeatureModeKind mode = FeatureModeKind::AllGiven;
  std::vector<Index> target_types;
};

FeatureMode feature_mode_from_int(int feat, std::vector<Index> target_types = {});

struct TypeFeatureSpec {
  bool one_hot = false;
  std::size_t raw_dim = 0;
  std::size_t count = 0;
};
using FeatureSpec = std::vector<TypeFeatureSpec>;

/// Per-type effective feature spec. Types that declare no raw features
/// (feature_dim 0) are treated as one-hot in every mode.
FeatureSpec apply_feature_mode(const HeteroGraph& graph, const FeatureMode& mode);

/// Maps every node type into a shared d0-dimensional space: x W_t + b_t for
/// kept types, a row of an embedding table for one-hot types.
class TypedProjector {
 public:
  TypedProjector(ParameterStore& store, const std::string& prefix, const HeteroGraph& graph,
                 FeatureSpec spec, std::size_t d_shared, Rng& rng);

  /// N x d0, differentiable with respect to every projector parameter.
  Var project(Tape& tape, const HeteroGraph& graph) const;

  std::size_t out_dim() const { return d_shared_; }
  const FeatureSpec& spec() const { return spec_; }
  Parameter* weight(Index t) const { return weight_.at(t); }
  Parameter* bias(Index t) const { return bias_.at(t); }
  Parameter* table(Index t) const { return table_.at(t); }

 private:
  FeatureSpec spec_;
  std::size_t d_shared_;
  std::vector<std::vector<Index>> members_;
  std::vector<Parameter*> weight_, bias_, table_;
};

}  // namespace hgb
