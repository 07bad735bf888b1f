#include "hgb/adam.hpp"

#include <cmath>

#include "hgb/errors.hpp"

namespace hgb {

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config) {
  if (!(config.lr > 0.0)) throw ContractError("adam_step: lr must be > 0");
  if (!(config.weight_decay >= 0.0)) throw ContractError("adam_step: weight_decay must be >= 0");

  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("adam_step: state tracks " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (!state.m[i].same_shape(p.value)) {
      throw ShapeError("adam_step: state shape mismatch for " + p.name);
    }
    if (p.trainable && p.grad.same_shape(p.value) && !p.grad.all_finite()) {
      throw NumericError("adam_step: non-finite gradient in parameter '" + p.name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable) continue;
    if (!p.grad.same_shape(p.value)) p.zero_grad();
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      w[j] -= config.lr * config.weight_decay * w[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace hgb
