#pragma once

// Differentiable operations recorded on a Tape. All operands must live on the
// same tape. Shapes are checked eagerly and reported with ShapeError.

#include <span>
#include <vector>

#include "hgb/rng.hpp"
#include "hgb/tape.hpp"

namespace hgb::ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
// a + row, with row (1 x cols) broadcast over every row of a.
Var add_row(Var a, Var row);
// a * row, row (1 x cols) broadcast.
Var mul_row(Var a, Var row);
// a * col, col (rows x 1) broadcast across columns.
Var mul_col(Var a, Var col);

Var relu(Var a);
Var elu(Var a, double alpha = 1.0);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
// log(sigmoid(a)), evaluated stably.
Var log_sigmoid(Var a);

// Sum / mean of all entries, 1x1.
Var sum(Var a);
Var mean(Var a);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);

Var gather_rows(Var a, std::span<const Index> index);
// Row e of `rows` is added into output row index[e]; output has num_out rows.
Var scatter_rows(Var rows, std::span<const Index> index, std::size_t num_out);
// Softmax of each score column within groups sharing the same index value.
Var segment_softmax(Var scores, std::span<const Index> index, std::size_t num_groups);

// Row-wise inner products: (rows x 1).
Var row_dot(Var a, Var b);
// Divides each row by max(norm, eps); the eps floor keeps zero rows finite.
Var l2_normalize_rows(Var a, double eps = 1e-12);

// Inverted dropout: kept entries are scaled by 1/(1-rate). Identity when
// !training or rate == 0.
Var dropout(Var a, double rate, Rng& rng, bool training);

// Mean softmax cross-entropy over the selected rows of `logits`.
Var softmax_cross_entropy(Var logits, std::span<const Index> rows,
                          std::span<const Index> labels);
// Mean binary cross-entropy with logits over every entry of logits/targets.
Var bce_with_logits(Var logits, const DenseMatrix& targets);

}  // namespace hgb::ops
