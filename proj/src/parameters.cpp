#include "hgb/parameters.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hgb/errors.hpp"

namespace hgb {

namespace {
constexpr char kCheckpointMagic[8] = {'H', 'G', 'B', 'P', 'A', 'R', 'M', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
  return v;
}
}  // namespace

void xavier_uniform(DenseMatrix& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

Parameter& ParameterStore::add(std::string name, DenseMatrix value, bool trainable) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(value);
  p->trainable = trainable;
  p->zero_grad();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::add_xavier(std::string name, std::size_t rows, std::size_t cols,
                                      Rng& rng) {
  DenseMatrix m(rows, cols);
  xavier_uniform(m, rng);
  return add(std::move(name), std::move(m));
}

Parameter& ParameterStore::add_zeros(std::string name, std::size_t rows, std::size_t cols,
                                     bool trainable) {
  return add(std::move(name), DenseMatrix(rows, cols), trainable);
}

std::vector<Parameter*> ParameterStore::all() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterStore::trainable() const {
  std::vector<Parameter*> out;
  for (const auto& p : params_) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterStore::at(const std::string& name) const {
  Parameter* p = find(name);
  if (p == nullptr) throw ContractError("no parameter named " + name);
  return *p;
}

std::size_t ParameterStore::trainable_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p->trainable) n += p->value.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

ParameterStore::Snapshot ParameterStore::snapshot() const {
  Snapshot s;
  s.reserve(params_.size());
  for (const auto& p : params_) s.push_back(p->value);
  return s;
}

void ParameterStore::restore(const Snapshot& snap) {
  if (snap.size() != params_.size()) throw ContractError("snapshot size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (!snap[i].same_shape(params_[i]->value)) {
      throw ShapeError("snapshot shape mismatch for " + params_[i]->name);
    }
    params_[i]->value = snap[i];
  }
}

void ParameterStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod<std::uint64_t>(out, params_.size());
  for (const auto& p : params_) {
    write_pod<std::uint64_t>(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_pod<std::uint64_t>(out, p->value.rows());
    write_pod<std::uint64_t>(out, p->value.cols());
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
}

void ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("checkpoint " + path.string() + ": bad magic");
  }
  const auto count = read_pod<std::uint64_t>(in);
  if (count != params_.size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " parameters, model has " +
                    std::to_string(params_.size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint64_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    Parameter& p = at(name);
    if (p.value.rows() != rows || p.value.cols() != cols) {
      throw DataError("checkpoint shape mismatch for " + name);
    }
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated data for " + name);
  }
}

}  // namespace hgb
