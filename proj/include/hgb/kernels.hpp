#pragma once

// Dense and graph kernels used by the tape ops.
//
// Two implementations share every signature: `serial` is the reference kept
// for testing, `parallel` splits the outer loop with OpenMP. Each output
// element is reduced in the same order by both, so results are bit-identical;
// the tests assert exact equality.

#include <span>
#include <vector>

#include "hgb/dense_matrix.hpp"

namespace hgb::kernels {

/// Stable counting-sort grouping of item positions by key.
/// Items with key g occupy order[offsets[g] .. offsets[g+1]) in original order.
struct Grouping {
  std::vector<Index> offsets;
  std::vector<Index> order;

  std::size_t groups() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const Index> members(Index g) const {
    return {order.data() + offsets[g], offsets[g + 1] - offsets[g]};
  }
};

// Throws IndexError if a key is >= num_groups.
Grouping group_by(std::span<const Index> keys, std::size_t num_groups);

namespace serial {
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// aᵀ·b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// a·bᵀ
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gather_rows(const DenseMatrix& src, std::span<const Index> index);
// out.row(index[e]) += rows.row(e)
DenseMatrix scatter_rows(const DenseMatrix& rows, std::span<const Index> index,
                         std::size_t num_out);
// Column-wise softmax of per-edge scores within each group of equal index.
DenseMatrix segment_softmax(const DenseMatrix& scores, std::span<const Index> index,
                            std::size_t num_groups);
// Backward of segment_softmax given its output and the output gradient.
DenseMatrix segment_softmax_backward(const DenseMatrix& out, const DenseMatrix& grad_out,
                                     std::span<const Index> index, std::size_t num_groups);
}  // namespace serial

namespace parallel {
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gather_rows(const DenseMatrix& src, std::span<const Index> index);
DenseMatrix scatter_rows(const DenseMatrix& rows, std::span<const Index> index,
                         std::size_t num_out);
DenseMatrix segment_softmax(const DenseMatrix& scores, std::span<const Index> index,
                            std::size_t num_groups);
DenseMatrix segment_softmax_backward(const DenseMatrix& out, const DenseMatrix& grad_out,
                                     std::span<const Index> index, std::size_t num_groups);

// Number of worker threads the parallel kernels will use (1 without OpenMP).
int max_threads();
void set_threads(int n);
}  // namespace parallel

}  // namespace hgb::kernels
