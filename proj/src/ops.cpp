#include "hgb/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "hgb/errors.hpp"
#include "hgb/kernels.hpp"

namespace hgb::ops {

namespace k = hgb::kernels::parallel;

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands on different tapes");
  return a.tape();
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " +
                     b.shape_string() + " differ");
  }
}

void accumulate(DenseMatrix& dst, const DenseMatrix& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

std::shared_ptr<const std::vector<Index>> share(std::span<const Index> index) {
  return std::make_shared<const std::vector<Index>>(index.begin(), index.end());
}

// Elementwise unary op: f gives the value, df the derivative given (x, y).
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const DenseMatrix& x = a.value();
  DenseMatrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = f(x.data()[i]);
  const NodeId ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, df](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    const DenseMatrix& xv = t.value(ia);
    const DenseMatrix& yv = t.value(self);
    DenseMatrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data()[i] += g.data()[i] * df(xv.data()[i], yv.data()[i]);
    }
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.value().shape_string() + " x " + b.value().shape_string());
  }
  const NodeId ia = a.id(), ib = b.id();
  return t.record(k::matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), k::matmul_nt(g, t.value(ib)));
    if (t.requires_grad(ib)) accumulate(t.grad_buffer(ib), k::matmul_tn(t.value(ia), g));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  DenseMatrix y = a.value();
  accumulate(y, b.value());
  const NodeId ia = a.id(), ib = b.id();
  return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad_buffer(ib), g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  DenseMatrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] -= b.value().data()[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), g);
    if (t.requires_grad(ib)) {
      DenseMatrix& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] -= g.data()[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  DenseMatrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= b.value().data()[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    if (t.requires_grad(ia)) {
      DenseMatrix& ga = t.grad_buffer(ia);
      const DenseMatrix& bv = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * bv.data()[i];
    }
    if (t.requires_grad(ib)) {
      DenseMatrix& gb = t.grad_buffer(ib);
      const DenseMatrix& av = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * av.data()[i];
    }
  });
}

Var scale(Var a, double c) {
  DenseMatrix y = a.value();
  for (double& v : y.values()) v *= c;
  const NodeId ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, c](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    DenseMatrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += c * g.data()[i];
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: " + a.value().shape_string() + " + " +
                     row.value().shape_string());
  }
  DenseMatrix y = a.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += row.value()(0, c);
  }
  const NodeId ia = a.id(), ir = row.id();
  return t.record(std::move(y), {ia, ir}, [ia, ir](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), g);
    if (t.requires_grad(ir)) {
      DenseMatrix& gr = t.grad_buffer(ir);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
      }
    }
  });
}

Var mul_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "mul_row");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("mul_row: " + a.value().shape_string() + " * " +
                     row.value().shape_string());
  }
  DenseMatrix y = a.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) *= row.value()(0, c);
  }
  const NodeId ia = a.id(), ir = row.id();
  return t.record(std::move(y), {ia, ir}, [ia, ir](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    const DenseMatrix& av = t.value(ia);
    const DenseMatrix& rv = t.value(ir);
    if (t.requires_grad(ia)) {
      DenseMatrix& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * rv(0, c);
      }
    }
    if (t.requires_grad(ir)) {
      DenseMatrix& gr = t.grad_buffer(ir);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c) * av(r, c);
      }
    }
  });
}

Var mul_col(Var a, Var col) {
  Tape& t = same_tape(a, col, "mul_col");
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw ShapeError("mul_col: " + a.value().shape_string() + " * " +
                     col.value().shape_string());
  }
  DenseMatrix y = a.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const double s = col.value()(r, 0);
    for (double& v : y.row(r)) v *= s;
  }
  const NodeId ia = a.id(), ic = col.id();
  return t.record(std::move(y), {ia, ic}, [ia, ic](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    const DenseMatrix& av = t.value(ia);
    const DenseMatrix& cv = t.value(ic);
    if (t.requires_grad(ia)) {
      DenseMatrix& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * cv(r, 0);
      }
    }
    if (t.requires_grad(ic)) {
      DenseMatrix& gc = t.grad_buffer(ic);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c) * av(r, c);
        gc(r, 0) += s;
      }
    }
  });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var elu(Var a, double alpha) {
  return unary(
      a, [alpha](double x) { return x > 0 ? x : alpha * std::expm1(x); },
      [alpha](double x, double y) { return x > 0 ? 1.0 : y + alpha; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Var log_sigmoid(Var a) {
  return unary(
      a, [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(-x); });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const NodeId ia = a.id();
  return a.tape().record(DenseMatrix(1, 1, s), {ia}, [ia](Tape& t, NodeId self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad_buffer(ia).values()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<NodeId> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw ContractError("concat_cols: operands on different tapes");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " +
                       std::to_string(rows));
    }
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  DenseMatrix y(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.value().row(r).data(), p.cols(), y.row(r).data() + offset);
    }
    offset += p.cols();
  }
  return t.record(std::move(y), ids, [ids, widths](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) {
        DenseMatrix& gi = t.grad_buffer(ids[i]);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < widths[i]; ++c) gi(r, c) += g(r, off + c);
        }
      }
      off += widths[i];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + a.value().shape_string());
  }
  DenseMatrix y(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.value().row(r).data() + begin, count, y.row(r).data());
  }
  const NodeId ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, begin, count](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    DenseMatrix& ga = t.grad_buffer(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Tape& t = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::vector<NodeId> ids;
  std::vector<double> data;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw ContractError("concat_rows: operands on different tapes");
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    ids.push_back(p.id());
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  }
  const std::size_t rows = data.size() / std::max<std::size_t>(cols, 1);
  return t.record(DenseMatrix(cols == 0 ? 0 : rows, cols, std::move(data)), ids,
                  [ids](Tape& t, NodeId self) {
                    const DenseMatrix& g = t.grad(self);
                    std::size_t off = 0;
                    for (NodeId id : ids) {
                      const std::size_t n = t.value(id).size();
                      if (t.requires_grad(id)) {
                        DenseMatrix& gi = t.grad_buffer(id);
                        for (std::size_t i = 0; i < n; ++i) gi.data()[i] += g.data()[off + i];
                      }
                      off += n;
                    }
                  });
}

Var gather_rows(Var a, std::span<const Index> index) {
  auto idx = share(index);
  const NodeId ia = a.id();
  const std::size_t n = a.rows();
  return a.tape().record(k::gather_rows(a.value(), *idx), {ia}, [ia, idx, n](Tape& t, NodeId self) {
    accumulate(t.grad_buffer(ia), k::scatter_rows(t.grad(self), *idx, n));
  });
}

Var scatter_rows(Var rows, std::span<const Index> index, std::size_t num_out) {
  auto idx = share(index);
  const NodeId ir = rows.id();
  return rows.tape().record(k::scatter_rows(rows.value(), *idx, num_out), {ir},
                            [ir, idx](Tape& t, NodeId self) {
                              accumulate(t.grad_buffer(ir), k::gather_rows(t.grad(self), *idx));
                            });
}

Var segment_softmax(Var scores, std::span<const Index> index, std::size_t num_groups) {
  auto idx = share(index);
  const NodeId is = scores.id();
  return scores.tape().record(
      k::segment_softmax(scores.value(), *idx, num_groups), {is},
      [is, idx, num_groups](Tape& t, NodeId self) {
        accumulate(t.grad_buffer(is),
                   k::segment_softmax_backward(t.value(self), t.grad(self), *idx, num_groups));
      });
}

Var row_dot(Var a, Var b) {
  Tape& t = same_tape(a, b, "row_dot");
  require_same_shape(a.value(), b.value(), "row_dot");
  DenseMatrix y(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a.value()(r, c) * b.value()(r, c);
    y(r, 0) = s;
  }
  const NodeId ia = a.id(), ib = b.id();
  return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    const DenseMatrix& av = t.value(ia);
    const DenseMatrix& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      DenseMatrix& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < av.rows(); ++r) {
        for (std::size_t c = 0; c < av.cols(); ++c) ga(r, c) += g(r, 0) * bv(r, c);
      }
    }
    if (t.requires_grad(ib)) {
      DenseMatrix& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < av.rows(); ++r) {
        for (std::size_t c = 0; c < av.cols(); ++c) gb(r, c) += g(r, 0) * av(r, c);
      }
    }
  });
}

Var l2_normalize_rows(Var a, double eps) {
  const DenseMatrix& x = a.value();
  DenseMatrix y(x.rows(), x.cols());
  std::vector<double> norms(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (double v : x.row(r)) s += v * v;
    norms[r] = std::max(std::sqrt(s), eps);
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = x(r, c) / norms[r];
  }
  const NodeId ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, norms, eps](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    const DenseMatrix& yv = t.value(self);
    DenseMatrix& ga = t.grad_buffer(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double n = norms[r];
      // At the eps floor the map is linear: y = x / eps.
      double proj = 0.0;
      if (n > eps) {
        for (std::size_t c = 0; c < g.cols(); ++c) proj += yv(r, c) * g(r, c);
      }
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += (g(r, c) - yv(r, c) * proj) / n;
    }
  });
}

Var dropout(Var a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw ContractError("dropout: rate must be < 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  DenseMatrix mask(a.rows(), a.cols());
  for (double& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  DenseMatrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask.data()[i];
  const NodeId ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, mask = std::move(mask)](Tape& t, NodeId self) {
    const DenseMatrix& g = t.grad(self);
    DenseMatrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * mask.data()[i];
  });
}

Var softmax_cross_entropy(Var logits, std::span<const Index> rows,
                          std::span<const Index> labels) {
  if (rows.size() != labels.size()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(rows.size()) + " rows, " +
                     std::to_string(labels.size()) + " labels");
  }
  if (rows.empty()) throw ContractError("softmax_cross_entropy: no rows selected");
  const DenseMatrix& z = logits.value();
  const std::size_t classes = z.cols();
  DenseMatrix probs(rows.size(), classes);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= z.rows()) throw IndexError("softmax_cross_entropy: row out of range");
    if (labels[i] >= classes) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                       " >= #classes " + std::to_string(classes));
    }
    auto zr = z.row(rows[i]);
    const double mx = *std::max_element(zr.begin(), zr.end());
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(zr[c] - mx);
    const double lse = mx + std::log(s);
    loss += lse - zr[labels[i]];
    for (std::size_t c = 0; c < classes; ++c) probs(i, c) = std::exp(zr[c] - lse);
  }
  const double n = static_cast<double>(rows.size());
  auto r = share(rows);
  auto l = share(labels);
  const NodeId il = logits.id();
  return logits.tape().record(
      DenseMatrix(1, 1, loss / n), {il},
      [il, r, l, probs = std::move(probs), n](Tape& t, NodeId self) {
        const double g = t.grad(self)(0, 0) / n;
        DenseMatrix& gl = t.grad_buffer(il);
        for (std::size_t i = 0; i < r->size(); ++i) {
          for (std::size_t c = 0; c < probs.cols(); ++c) {
            const double target = (*l)[i] == c ? 1.0 : 0.0;
            gl((*r)[i], c) += g * (probs(i, c) - target);
          }
        }
      });
}

Var bce_with_logits(Var logits, const DenseMatrix& targets) {
  require_same_shape(logits.value(), targets, "bce_with_logits");
  if (targets.size() == 0) throw ContractError("bce_with_logits: empty input");
  const DenseMatrix& z = logits.value();
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    loss += std::max(x, 0.0) - x * targets.data()[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const double n = static_cast<double>(z.size());
  const NodeId il = logits.id();
  return logits.tape().record(DenseMatrix(1, 1, loss / n), {il},
                              [il, targets, n](Tape& t, NodeId self) {
                                const double g = t.grad(self)(0, 0) / n;
                                const DenseMatrix& zv = t.value(il);
                                DenseMatrix& gl = t.grad_buffer(il);
                                for (std::size_t i = 0; i < zv.size(); ++i) {
                                  gl.data()[i] +=
                                      g * (stable_sigmoid(zv.data()[i]) - targets.data()[i]);
                                }
                              });
}

}  // namespace hgb::ops
