#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hgb/dense_matrix.hpp"
#include "hgb/rng.hpp"

namespace hgb {

/// A learnable tensor that outlives individual tapes.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
  bool trainable = true;

  void zero_grad() { grad = DenseMatrix(value.rows(), value.cols()); }
};

/// Owns every parameter of a model. Addresses are stable for the store's lifetime.
class ParameterStore {
 public:
  Parameter& add(std::string name, DenseMatrix value, bool trainable = true);
  // Xavier-uniform initialisation with bound sqrt(6 / (fan_in + fan_out)).
  Parameter& add_xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng);
  Parameter& add_zeros(std::string name, std::size_t rows, std::size_t cols,
                       bool trainable = true);

  std::vector<Parameter*> all() const;
  std::vector<Parameter*> trainable() const;
  Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  // Number of trainable scalars.
  std::size_t trainable_scalars() const;

  void zero_grad();

  using Snapshot = std::vector<DenseMatrix>;
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

  // Binary checkpoint: magic, count, then (name, rows, cols, f64 data) per parameter.
  void save(const std::filesystem::path& path) const;
  // Loads values into already-created parameters, matched by name and shape.
  void load(const std::filesystem::path& path);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

void xavier_uniform(DenseMatrix& m, Rng& rng);

}  // namespace hgb
