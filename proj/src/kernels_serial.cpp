#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hgb/errors.hpp"
#include "hgb/kernels.hpp"

namespace hgb::kernels {

namespace {
void check_index(std::span<const Index> index, std::size_t bound, const char* what) {
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= bound) {
      throw IndexError(std::string(what) + ": index " + std::to_string(index[e]) +
                       " at position " + std::to_string(e) + " out of range " +
                       std::to_string(bound));
    }
  }
}
}  // namespace

Grouping group_by(std::span<const Index> keys, std::size_t num_groups) {
  check_index(keys, num_groups, "group_by");
  Grouping g;
  g.offsets.assign(num_groups + 1, 0);
  for (Index k : keys) ++g.offsets[k + 1];
  for (std::size_t i = 0; i < num_groups; ++i) g.offsets[i + 1] += g.offsets[i];
  g.order.resize(keys.size());
  std::vector<Index> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (Index e = 0; e < keys.size(); ++e) g.order[cursor[keys[e]]++] = e;
  return g;
}

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
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
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* brow = b.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      double* o = out.data() + k * n;
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
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

DenseMatrix gather_rows(const DenseMatrix& src, std::span<const Index> index) {
  check_index(index, src.rows(), "gather_rows");
  DenseMatrix out(index.size(), src.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
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
  check_index(index, num_out, "scatter_rows");
  DenseMatrix out(num_out, rows.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    auto dst = out.row(index[e]);
    auto src = rows.row(e);
    for (std::size_t c = 0; c < rows.cols(); ++c) dst[c] += src[c];
  }
  return out;
}

DenseMatrix segment_softmax(const DenseMatrix& scores, std::span<const Index> index,
                            std::size_t num_groups) {
  if (scores.rows() != index.size()) {
    throw ShapeError("segment_softmax: " + std::to_string(scores.rows()) + " scores for " +
                     std::to_string(index.size()) + " indices");
  }
  check_index(index, num_groups, "segment_softmax");
  const std::size_t k = scores.cols();
  DenseMatrix maxes(num_groups, k, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < index.size(); ++e) {
    for (std::size_t c = 0; c < k; ++c) {
      maxes(index[e], c) = std::max(maxes(index[e], c), scores(e, c));
    }
  }
  DenseMatrix out(scores.rows(), k);
  DenseMatrix sums(num_groups, k);
  for (std::size_t e = 0; e < index.size(); ++e) {
    for (std::size_t c = 0; c < k; ++c) {
      const double v = std::exp(scores(e, c) - maxes(index[e], c));
      out(e, c) = v;
      sums(index[e], c) += v;
    }
  }
  for (std::size_t e = 0; e < index.size(); ++e) {
    for (std::size_t c = 0; c < k; ++c) out(e, c) /= sums(index[e], c);
  }
  return out;
}

DenseMatrix segment_softmax_backward(const DenseMatrix& out, const DenseMatrix& grad_out,
                                     std::span<const Index> index, std::size_t num_groups) {
  check_index(index, num_groups, "segment_softmax_backward");
  const std::size_t k = out.cols();
  DenseMatrix dots(num_groups, k);
  for (std::size_t e = 0; e < index.size(); ++e) {
    for (std::size_t c = 0; c < k; ++c) dots(index[e], c) += out(e, c) * grad_out(e, c);
  }
  DenseMatrix grad(out.rows(), k);
  for (std::size_t e = 0; e < index.size(); ++e) {
    for (std::size_t c = 0; c < k; ++c) {
      grad(e, c) = out(e, c) * (grad_out(e, c) - dots(index[e], c));
    }
  }
  return grad;
}

}  // namespace serial
}  // namespace hgb::kernels
