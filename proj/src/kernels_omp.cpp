#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hgb/errors.hpp"
#include "hgb/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hgb::kernels::parallel {

namespace {

// Below this many scalar multiply-adds the fork/join overhead dominates.
constexpr std::size_t kMinParallelWork = 1 << 14;

void check_index(std::span<const Index> index, std::size_t bound, const char* what) {
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= bound) {
      throw IndexError(std::string(what) + ": index " + std::to_string(index[e]) +
                       " at position " + std::to_string(e) + " out of range " +
                       std::to_string(bound));
    }
  }
}

using sidx = std::ptrdiff_t;

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  const std::size_t inner = a.cols();
  const sidx rows = static_cast<sidx>(a.rows());
  [[maybe_unused]] const bool big = a.rows() * inner * n >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (sidx i = 0; i < rows; ++i) {
    double* o = out.data() + i * n;
    const double* arow = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = arow[k];
      const double* brow = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + a.shape_string() + "^T x " + b.shape_string());
  }
  DenseMatrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  const std::size_t m = a.rows();
  const std::size_t acols = a.cols();
  const sidx rows = static_cast<sidx>(acols);
  [[maybe_unused]] const bool big = m * acols * n >= kMinParallelWork;
  // Each output row k accumulates over i in ascending order, as the serial loop does.
#pragma omp parallel for schedule(static) if (big)
  for (sidx k = 0; k < rows; ++k) {
    double* o = out.data() + k * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aik = a.data()[i * acols + k];
      const double* brow = b.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape_string() + " x " + b.shape_string() + "^T");
  }
  DenseMatrix out(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  const sidx rows = static_cast<sidx>(a.rows());
  [[maybe_unused]] const bool big = a.rows() * b.rows() * inner >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (sidx i = 0; i < rows; ++i) {
    const double* arow = a.data() + i * inner;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.data() + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
      out(static_cast<std::size_t>(i), j) = s;
    }
  }
  return out;
}

DenseMatrix gather_rows(const DenseMatrix& src, std::span<const Index> index) {
  check_index(index, src.rows(), "gather_rows");
  DenseMatrix out(index.size(), src.cols());
  const sidx rows = static_cast<sidx>(index.size());
  [[maybe_unused]] const bool big = index.size() * src.cols() >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (sidx e = 0; e < rows; ++e) {
    std::copy_n(src.row(index[e]).data(), src.cols(), out.row(e).data());
  }
  return out;
}

DenseMatrix scatter_rows(const DenseMatrix& rows, std::span<const Index> index,
                         std::size_t num_out) {
  if (rows.rows() != index.size()) {
    throw ShapeError("scatter_rows: " + std::to_string(rows.rows()) + " rows for " +
                     std::to_string(index.size()) + " indices");
  }
  const Grouping groups = group_by(index, num_out);
  DenseMatrix out(num_out, rows.cols());
  const std::size_t k = rows.cols();
  const sidx n = static_cast<sidx>(num_out);
  [[maybe_unused]] const bool big = index.size() * k >= kMinParallelWork;
#pragma omp parallel for schedule(dynamic, 64) if (big)
  for (sidx g = 0; g < n; ++g) {
    auto dst = out.row(g);
    for (Index e : groups.members(g)) {
      auto src = rows.row(e);
      for (std::size_t c = 0; c < k; ++c) dst[c] += src[c];
    }
  }
  return out;
}

DenseMatrix segment_softmax(const DenseMatrix& scores, std::span<const Index> index,
                            std::size_t num_groups) {
  if (scores.rows() != index.size()) {
    throw ShapeError("segment_softmax: " + std::to_string(scores.rows()) + " scores for " +
                     std::to_string(index.size()) + " indices");
  }
  const Grouping groups = group_by(index, num_groups);
  const std::size_t k = scores.cols();
  DenseMatrix out(scores.rows(), k);
  const sidx n = static_cast<sidx>(num_groups);
  [[maybe_unused]] const bool big = index.size() * k >= kMinParallelWork;
#pragma omp parallel for schedule(dynamic, 64) if (big)
  for (sidx g = 0; g < n; ++g) {
    const auto members = groups.members(g);
    for (std::size_t c = 0; c < k; ++c) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Index e : members) mx = std::max(mx, scores(e, c));
      double sum = 0.0;
      for (Index e : members) {
        const double v = std::exp(scores(e, c) - mx);
        out(e, c) = v;
        sum += v;
      }
      for (Index e : members) out(e, c) /= sum;
    }
  }
  return out;
}

DenseMatrix segment_softmax_backward(const DenseMatrix& out, const DenseMatrix& grad_out,
                                     std::span<const Index> index, std::size_t num_groups) {
  const Grouping groups = group_by(index, num_groups);
  const std::size_t k = out.cols();
  DenseMatrix grad(out.rows(), k);
  const sidx n = static_cast<sidx>(num_groups);
  [[maybe_unused]] const bool big = index.size() * k >= kMinParallelWork;
#pragma omp parallel for schedule(dynamic, 64) if (big)
  for (sidx g = 0; g < n; ++g) {
    const auto members = groups.members(g);
    for (std::size_t c = 0; c < k; ++c) {
      double dot = 0.0;
      for (Index e : members) dot += out(e, c) * grad_out(e, c);
      for (Index e : members) grad(e, c) = out(e, c) * (grad_out(e, c) - dot);
    }
  }
  return grad;
}

}  // namespace hgb::kernels::parallel
