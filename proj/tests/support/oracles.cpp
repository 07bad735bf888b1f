#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

namespace oracle {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, hgb::Rng& rng, double lo,
                          double hi) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix dense_scatter(const DenseMatrix& messages, const std::vector<Index>& dst,
                          std::size_t num_nodes) {
  DenseMatrix adj(num_nodes, dst.size());
  for (std::size_t e = 0; e < dst.size(); ++e) adj(dst[e], e) = 1.0;
  return naive_matmul(adj, messages);
}

double relative_error(const DenseMatrix& analytic, const DenseMatrix& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double n = numeric.data()[i];
    diff += (a - n) * (a - n);
    na += a * a;
    nn += n * n;
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-7});
}

DenseMatrix numeric_gradient(const std::function<double(const std::vector<DenseMatrix>&)>& f,
                             std::vector<DenseMatrix> inputs, std::size_t which, double step) {
  DenseMatrix g(inputs[which].rows(), inputs[which].cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double orig = inputs[which].data()[i];
    inputs[which].data()[i] = orig + step;
    const double fp = f(inputs);
    inputs[which].data()[i] = orig - step;
    const double fm = f(inputs);
    inputs[which].data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

std::vector<double> gradcheck(
    const std::function<hgb::Var(hgb::Tape&, const std::vector<hgb::Var>&)>& build,
    const std::vector<DenseMatrix>& inputs, double step) {
  hgb::Tape tape;
  std::vector<hgb::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.variable(m));
  hgb::Var loss = build(tape, vars);
  tape.backward(loss);

  auto eval = [&](const std::vector<DenseMatrix>& xs) {
    hgb::Tape t;
    std::vector<hgb::Var> vs;
    for (const auto& m : xs) vs.push_back(t.variable(m));
    return build(t, vs).value()(0, 0);
  };
  std::vector<double> errors;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    DenseMatrix analytic = vars[i].grad();
    if (analytic.empty()) analytic = DenseMatrix(inputs[i].rows(), inputs[i].cols());
    errors.push_back(relative_error(analytic, numeric_gradient(eval, inputs, i, step)));
  }
  return errors;
}

std::map<std::string, double> gradcheck_parameters(
    hgb::ParameterStore& store, const std::function<hgb::Var(hgb::Tape&)>& build_loss,
    double step) {
  store.zero_grad();
  {
    hgb::Tape tape;
    tape.backward(build_loss(tape));
  }
  auto eval = [&] {
    hgb::Tape t;
    return build_loss(t).value()(0, 0);
  };
  std::map<std::string, double> errors;
  for (hgb::Parameter* p : store.trainable()) {
    DenseMatrix numeric(p->value.rows(), p->value.cols());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + step;
      const double fp = eval();
      p->value.data()[i] = orig - step;
      const double fm = eval();
      p->value.data()[i] = orig;
      numeric.data()[i] = (fp - fm) / (2.0 * step);
    }
    errors[p->name] = relative_error(p->grad, numeric);
  }
  return errors;
}

}  // namespace oracle

namespace oracle {

std::vector<std::size_t> bfs_distances(const hgb::HeteroGraph& graph, Index source) {
  const std::size_t n = graph.node_count();
  const auto self = graph.self_edge_type();
  std::vector<std::vector<Index>> adj(n);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (self && graph.edges.etype[e] == *self) continue;
    adj[graph.edges.src[e]].push_back(graph.edges.dst[e]);
    adj[graph.edges.dst[e]].push_back(graph.edges.src[e]);
  }
  std::vector<std::size_t> dist(n, SIZE_MAX);
  std::vector<Index> queue{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Index v = queue[head];
    for (Index w : adj[v]) {
      if (dist[w] == SIZE_MAX) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

namespace {
void dfs_paths(const hgb::HeteroGraph& g, const std::vector<Index>& steps, std::size_t depth, Index start,
               Index at, std::set<hgb::NodePair>& found) {
  if (depth == steps.size()) {
    found.emplace(start, at);
    return;
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (g.edges.etype[e] == steps[depth] && g.edges.src[e] == at) {
      dfs_paths(g, steps, depth + 1, start, g.edges.dst[e], found);
    }
  }
}
}  // namespace

std::vector<hgb::NodePair> enumerate_metapath_pairs(const hgb::HeteroGraph& graph,
                                                    const std::vector<Index>& steps) {
  std::set<hgb::NodePair> found;
  for (Index u = 0; u < graph.node_count(); ++u) dfs_paths(graph, steps, 0, u, u, found);
  return {found.begin(), found.end()};
}

double chi_square_uniform(const std::vector<std::size_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

}  // namespace oracle

namespace oracle {

DenseMatrix dense_normalized_adjacency(const hgb::HeteroGraph& graph) {
  const std::size_t n = graph.node_count();
  const auto self = graph.self_edge_type();
  DenseMatrix a(n, n);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (self && graph.edges.etype[e] == *self) continue;
    const Index s = graph.edges.src[e], d = graph.edges.dst[e];
    a(s, d) = 1.0;
    a(d, s) = 1.0;
  }
  for (Index v = 0; v < n; ++v) a(v, v) = 1.0;
  std::vector<double> deg(n, 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) deg[i] += a(i, j);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

DenseMatrix edge_loop_gat(const std::vector<Index>& src, const std::vector<Index>& dst, std::size_t num_nodes,
                          const DenseMatrix& h, const std::vector<GatHead>& heads, double slope, bool average,
                          std::vector<std::vector<double>>* alpha_out) {
  const std::size_t K = heads.size(), dh = heads.front().W.cols();
  DenseMatrix out(num_nodes, average ? dh : K * dh);
  if (alpha_out) alpha_out->assign(src.size(), std::vector<double>(K, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    const DenseMatrix z = naive_matmul(h, heads[k].W);
    for (Index i = 0; i < num_nodes; ++i) {
      std::vector<std::size_t> in;
      for (std::size_t e = 0; e < src.size(); ++e)
        if (dst[e] == i) in.push_back(e);
      std::vector<double> score;
      double best = -INFINITY;
      for (auto e : in) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += heads[k].a(0, c) * z(i, c) + heads[k].a(0, dh + c) * z(src[e], c);
        s = s > 0 ? s : slope * s;
        score.push_back(s);
        best = std::max(best, s);
      }
      double total = 0.0;
      for (double& s : score) total += (s = std::exp(s - best));
      for (std::size_t m = 0; m < in.size(); ++m) {
        const double alpha = score[m] / total;
        if (alpha_out) (*alpha_out)[in[m]][k] = alpha;
        for (std::size_t c = 0; c < dh; ++c) {
          const double v = alpha * z(src[in[m]], c);
          if (average) out(i, c) += v / static_cast<double>(K);
          else out(i, k * dh + c) += v;
        }
      }
    }
  }
  return out;
}

DenseMatrix dense_rgcn(const hgb::HeteroGraph& graph, const DenseMatrix& h, const std::vector<DenseMatrix>& w_r,
                       const DenseMatrix& w_0) {
  const std::size_t n = graph.node_count();
  const auto self = graph.self_edge_type();
  DenseMatrix out = naive_matmul(h, w_0);
  std::size_t rel = 0;
  for (Index r = 0; r < graph.num_edge_types(); ++r) {
    if (self && r == *self) continue;
    DenseMatrix a(n, n);
    for (std::size_t e = 0; e < graph.edges.size(); ++e)
      if (graph.edges.etype[e] == r) a(graph.edges.dst[e], graph.edges.src[e]) += 1.0;
    for (Index i = 0; i < n; ++i) {
      double c = 0.0;
      for (Index j = 0; j < n; ++j) c += a(i, j);
      if (c > 0)
        for (Index j = 0; j < n; ++j) a(i, j) /= c;
    }
    const DenseMatrix msg = naive_matmul(a, naive_matmul(h, w_r[rel++]));
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += msg.data()[k];
  }
  return out;
}

}  // namespace oracle

namespace oracle {

double auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        den += 1;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return num / den;
}

std::pair<double, double> f1(const std::vector<std::set<Index>>& p, const std::vector<std::set<Index>>& t,
                             std::size_t C) {
  double macro = 0, TP = 0, FP = 0, FN = 0;
  for (Index c = 0; c < C; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool a = p[i].count(c), b = t[i].count(c);
      tp += a && b;
      fp += a && !b;
      fn += !a && b;
    }
    const double prec = tp + fp ? tp / (tp + fp) : 0, rec = tp + fn ? tp / (tp + fn) : 0;
    macro += prec + rec ? 2 * prec * rec / (prec + rec) : 0;
    TP += tp;
    FP += fp;
    FN += fn;
  }
  const double prec = TP + FP ? TP / (TP + FP) : 0, rec = TP + FN ? TP / (TP + FN) : 0;
  return {macro / C, prec + rec ? 2 * prec * rec / (prec + rec) : 0};
}

double mrr(const std::vector<hgb::ScoredPair>& pairs) {
  // Heads in order of first appearance, so the mean sums the same terms in
  // the same order as the implementation and can be compared exactly.
  std::vector<Index> order;
  std::map<Index, std::vector<hgb::ScoredPair>> by_head;
  for (const auto& sp : pairs) {
    if (!by_head.count(sp.head)) order.push_back(sp.head);
    by_head[sp.head].push_back(sp);
  }
  double total = 0;
  std::size_t heads = 0;
  for (Index h : order) {
    const auto& cands = by_head[h];
    double best = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!cands[i].positive) continue;
      double rank = 1;
      for (std::size_t j = 0; j < cands.size(); ++j)
        if (cands[j].score > cands[i].score || (cands[j].score == cands[i].score && j < i)) rank += 1;
      if (best == 0 || rank < best) best = rank;
    }
    if (best == 0) continue;
    total += 1.0 / best;
    ++heads;
  }
  return heads ? total / heads : 0.0;
}

std::vector<Index> ranked_items(const std::vector<double>& scores, const std::vector<Index>& exclude, std::size_t k) {
  std::vector<Index> all;
  for (Index i = 0; i < scores.size(); ++i)
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) all.push_back(i);
  std::stable_sort(all.begin(), all.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
  all.resize(std::min(k, all.size()));
  return all;
}

std::pair<double, double> recall_ndcg(const std::vector<std::vector<Index>>& ranked,
                                      const std::vector<std::vector<Index>>& relevant, std::size_t k) {
  double rec = 0, nd = 0;
  std::size_t users = 0;
  for (std::size_t u = 0; u < ranked.size(); ++u) {
    const std::set<Index> R(relevant[u].begin(), relevant[u].end());
    if (R.empty()) continue;
    double hits = 0, dcg = 0, idcg = 0;
    for (std::size_t r = 0; r < std::min(k, ranked[u].size()); ++r)
      if (R.count(ranked[u][r])) {
        hits += 1;
        dcg += 1.0 / std::log2(r + 2.0);
      }
    for (std::size_t r = 0; r < std::min(R.size(), k); ++r) idcg += 1.0 / std::log2(r + 2.0);
    rec += hits / R.size();
    nd += dcg / idcg;
    ++users;
  }
  return {users ? rec / users : 0.0, users ? nd / users : 0.0};
}

}  // namespace oracle
