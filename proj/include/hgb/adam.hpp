#pragma once

#include <span>
#include <vector>

#include "hgb/parameters.hpp"

namespace hgb {

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments, one pair per parameter in the order passed to adam_step.
struct AdamState {
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
  std::size_t step = 0;
};

/// One Adam update with decoupled weight decay (p <- p - lr*wd*p, then the
/// bias-corrected moment step). Frozen parameters are skipped. If any gradient
/// is non-finite the step is aborted before touching any parameter and a
/// NumericError naming the parameter is thrown.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config);

}  // namespace hgb
