#include <algorithm>
#include <cmath>
#include <set>

#include "hgb/errors.hpp"
#include "hgb/models.hpp"

namespace hgb {

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::ReLU: return ops::relu(x);
    case Activation::ELU: return ops::elu(x);
  }
  return x;
}

MessageGraph MessageGraph::from(const HeteroGraph& graph) {
  const HeteroGraph looped = add_self_loops(graph);
  MessageGraph g;
  g.num_nodes = looped.node_count();
  g.num_edge_types = looped.num_edge_types();
  g.src = looped.edges.src;
  g.dst = looped.edges.dst;
  g.etype = looped.edges.etype;
  return g;
}

void MessageGraph::require_in_edges(const char* who) const {
  std::vector<char> seen(num_nodes, 0);
  for (Index d : dst) seen[d] = 1;
  for (Index v = 0; v < num_nodes; ++v) {
    if (!seen[v]) {
      throw ContractError(std::string(who) + ": node " + std::to_string(v) +
                          " has no incoming edge; add self-loops first");
    }
  }
}

NormalizedAdjacency NormalizedAdjacency::from(const HeteroGraph& graph) {
  const auto self = graph.self_edge_type();
  std::set<NodePair> pairs;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (self && graph.edges.etype[e] == *self) continue;
    const Index s = graph.edges.src[e], d = graph.edges.dst[e];
    if (s == d) continue;
    pairs.emplace(s, d);
    pairs.emplace(d, s);
  }
  NormalizedAdjacency a;
  a.num_nodes = graph.node_count();
  std::vector<double> degree(a.num_nodes, 1.0);
  for (const auto& [s, d] : pairs) degree[d] += 1.0;
  for (Index v = 0; v < a.num_nodes; ++v) {
    a.src.push_back(v);
    a.dst.push_back(v);
    a.weight.push_back(1.0 / degree[v]);
  }
  for (const auto& [s, d] : pairs) {
    a.src.push_back(s);
    a.dst.push_back(d);
    a.weight.push_back(1.0 / std::sqrt(degree[s] * degree[d]));
  }
  return a;
}

namespace {

void check_input(Var h, std::size_t rows, std::size_t cols, const char* who) {
  if (h.rows() != rows || h.cols() != cols) {
    throw ShapeError(std::string(who) + ": input is " + h.value().shape_string() + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix column_of(const std::vector<double>& v) {
  DenseMatrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

GCNLayer::GCNLayer(ParameterStore& store, const std::string& name, std::size_t in_dim, std::size_t out_dim,
                   Activation act, Rng& rng)
    : w_(&store.add_xavier(name + ".W", in_dim, out_dim, rng)), act_(act) {}

Var GCNLayer::forward(Tape& tape, const NormalizedAdjacency& adj, Var h) const {
  check_input(h, adj.num_nodes, w_->value.rows(), "GCN layer");
  Var z = ops::matmul(h, tape.parameter(*w_));
  Var msg = ops::mul_col(ops::gather_rows(z, adj.src), tape.constant(column_of(adj.weight)));
  return activate(ops::scatter_rows(msg, adj.dst, adj.num_nodes), act_);
}

GATLayer::GATLayer(ParameterStore& store, const std::string& name, std::size_t in_dim, std::size_t head_dim,
                   std::size_t heads, bool average_heads, double slope, Activation act, Rng& rng)
    : average_(average_heads), slope_(slope), act_(act) {
  if (heads == 0) throw ContractError("GAT layer needs at least one head");
  for (std::size_t k = 0; k < heads; ++k) {
    const std::string h = name + ".head" + std::to_string(k);
    w_.push_back(&store.add_xavier(h + ".W", in_dim, head_dim, rng));
    a_.push_back(&store.add_xavier(h + ".a", 1, 2 * head_dim, rng));
  }
}

std::size_t GATLayer::out_dim() const {
  const std::size_t d = w_.front()->value.cols();
  return average_ ? d : d * w_.size();
}

std::vector<Var> GATLayer::transform(Tape& tape, const MessageGraph& g, Var h) const {
  check_input(h, g.num_nodes, w_.front()->value.rows(), "GAT layer");
  std::vector<Var> z;
  for (auto* w : w_) z.push_back(ops::matmul(h, tape.parameter(*w)));
  return z;
}

Var GATLayer::head_attention(Tape& tape, const MessageGraph& g, const std::vector<Var>& z) const {
  g.require_in_edges("GAT attention");
  std::vector<Var> per_head;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    const std::size_t d = z[k].cols();
    Var a = tape.parameter(*a_[k]);
    Var ones = tape.constant(DenseMatrix(d, 1, 1.0));
    Var s_dst = ops::matmul(ops::mul_row(z[k], ops::slice_cols(a, 0, d)), ones);
    Var s_src = ops::matmul(ops::mul_row(z[k], ops::slice_cols(a, d, d)), ones);
    Var score = ops::add(ops::gather_rows(s_dst, g.dst), ops::gather_rows(s_src, g.src));
    per_head.push_back(ops::segment_softmax(ops::leaky_relu(score, slope_), g.dst, g.num_nodes));
  }
  return ops::concat_cols(per_head);
}

Var GATLayer::attention(Tape& tape, const MessageGraph& g, Var h) const {
  return head_attention(tape, g, transform(tape, g, h));
}

Var GATLayer::forward(Tape& tape, const MessageGraph& g, Var h, double attn_dropout, Rng* rng,
                      bool training) const {
  const auto z = transform(tape, g, h);
  Var alpha = head_attention(tape, g, z);
  if (training && attn_dropout > 0.0 && rng) alpha = ops::dropout(alpha, attn_dropout, *rng, true);
  std::vector<Var> heads;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    Var msg = ops::mul_col(ops::gather_rows(z[k], g.src), ops::slice_cols(alpha, k, 1));
    heads.push_back(ops::scatter_rows(msg, g.dst, g.num_nodes));
  }
  Var out;
  if (average_) {
    out = heads.front();
    for (std::size_t k = 1; k < heads.size(); ++k) out = ops::add(out, heads[k]);
    out = ops::scale(out, 1.0 / static_cast<double>(heads.size()));
  } else {
    out = ops::concat_cols(heads);
  }
  return activate(out, act_);
}

RGCNLayer::RGCNLayer(ParameterStore& store, const std::string& name, const HeteroGraph& graph,
                     std::size_t in_dim, std::size_t out_dim, Activation act, Rng& rng)
    : num_nodes_(graph.node_count()), act_(act) {
  const auto self = graph.self_edge_type();
  for (Index r = 0; r < graph.num_edge_types(); ++r) {
    if (self && r == *self) continue;
    Relation rel;
    std::vector<double> count(num_nodes_, 0.0);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      if (graph.edges.etype[e] != r) continue;
      rel.src.push_back(graph.edges.src[e]);
      rel.dst.push_back(graph.edges.dst[e]);
      count[graph.edges.dst[e]] += 1.0;
    }
    rel.inv_count = DenseMatrix(rel.src.size(), 1);
    for (std::size_t e = 0; e < rel.src.size(); ++e) rel.inv_count(e, 0) = 1.0 / count[rel.dst[e]];
    relations_.push_back(std::move(rel));
    w_r_.push_back(&store.add_xavier(name + ".W_" + graph.edge_types[r].name, in_dim, out_dim, rng));
  }
  w_0_ = &store.add_xavier(name + ".W_self", in_dim, out_dim, rng);
}

Var RGCNLayer::forward(Tape& tape, Var h) const {
  check_input(h, num_nodes_, w_0_->value.rows(), "RGCN layer");
  Var out = ops::matmul(h, tape.parameter(*w_0_));
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    const auto& rel = relations_[r];
    if (rel.src.empty()) continue;
    Var z = ops::matmul(h, tape.parameter(*w_r_[r]));
    Var msg = ops::mul_col(ops::gather_rows(z, rel.src), tape.constant(rel.inv_count));
    out = ops::add(out, ops::scatter_rows(msg, rel.dst, num_nodes_));
  }
  return activate(out, act_);
}

SimpleHGNLayer::SimpleHGNLayer(ParameterStore& store, const std::string& name, const SimpleHGNLayerConfig& cfg,
                               Rng& rng)
    : cfg_(cfg) {
  if (cfg.heads == 0 || cfg.head_dim == 0) throw ContractError("Simple-HGN layer needs heads and a head width");
  if (cfg.beta < 0.0 || cfg.beta > 1.0) throw ContractError("beta must lie in [0, 1]");
  if (cfg.edge_dim == 0 || cfg.num_edge_types == 0) throw ContractError("Simple-HGN layer needs edge types");
  const std::size_t K = cfg.heads, dh = cfg.head_dim, width = K * dh;
  w_ = &store.add_xavier(name + ".W", cfg.in_dim, width, rng);
  a_dst_ = &store.add_xavier(name + ".a_dst", 1, width, rng);
  a_src_ = &store.add_xavier(name + ".a_src", 1, width, rng);
  a_edge_ = &store.add_xavier(name + ".a_edge", 1, width, rng);
  if (cfg.type_embedding) {
    r_ = &store.add_xavier(name + ".edge_emb", cfg.num_edge_types, cfg.edge_dim, rng);
  } else {
    r_ = &store.add_zeros(name + ".edge_emb", cfg.num_edge_types, cfg.edge_dim, false);
  }
  w_r_ = &store.add_xavier(name + ".W_r", cfg.edge_dim, width, rng);
  if (!cfg.average_heads && cfg.node_residual && cfg.in_dim != width) {
    w_res_ = &store.add_xavier(name + ".W_res", cfg.in_dim, width, rng);
  }
  head_sum_ = DenseMatrix(width, K);
  head_spread_ = DenseMatrix(K, width);
  head_mean_ = DenseMatrix(width, dh);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t c = 0; c < dh; ++c) {
      head_sum_(k * dh + c, k) = 1.0;
      head_spread_(k, k * dh + c) = 1.0;
      head_mean_(k * dh + c, c) = 1.0 / static_cast<double>(K);
    }
}

Var SimpleHGNLayer::attention(Tape& tape, const MessageGraph& g, Var z,
                              const std::optional<Var>& prev_alpha) const {
  g.require_in_edges("Simple-HGN attention");
  for (Index t : g.etype) {
    if (t >= cfg_.num_edge_types) throw IndexError("Simple-HGN attention: unknown edge type " + std::to_string(t));
  }
  Var sum_heads = tape.constant(head_sum_);
  // Per-node and per-type partial scores, one column per head.
  Var s_dst = ops::matmul(ops::mul_row(z, tape.parameter(*a_dst_)), sum_heads);
  Var s_src = ops::matmul(ops::mul_row(z, tape.parameter(*a_src_)), sum_heads);
  Var type_z = ops::matmul(tape.parameter(*r_), tape.parameter(*w_r_));
  Var s_type = ops::matmul(ops::mul_row(type_z, tape.parameter(*a_edge_)), sum_heads);
  Var score = ops::add(ops::add(ops::gather_rows(s_dst, g.dst), ops::gather_rows(s_src, g.src)),
                       ops::gather_rows(s_type, g.etype));
  Var alpha_hat = ops::segment_softmax(ops::leaky_relu(score, cfg_.slope), g.dst, g.num_nodes);
  if (!prev_alpha || cfg_.beta == 0.0) return alpha_hat;
  if (prev_alpha->rows() != alpha_hat.rows() || prev_alpha->cols() != alpha_hat.cols()) {
    throw ShapeError("edge residual: previous attention is " + prev_alpha->value().shape_string() + ", expected " +
                     alpha_hat.value().shape_string());
  }
  if (cfg_.beta == 1.0) return *prev_alpha;
  return ops::add(ops::scale(alpha_hat, 1.0 - cfg_.beta), ops::scale(*prev_alpha, cfg_.beta));
}

LayerOutput SimpleHGNLayer::forward(Tape& tape, const MessageGraph& g, Var h, const std::optional<Var>& prev_alpha,
                                    double attn_dropout, Rng* rng, bool training) const {
  check_input(h, g.num_nodes, cfg_.in_dim, "Simple-HGN layer");
  Var z = ops::matmul(h, tape.parameter(*w_));
  Var alpha = attention(tape, g, z, prev_alpha);
  Var used = alpha;
  if (training && attn_dropout > 0.0 && rng) used = ops::dropout(alpha, attn_dropout, *rng, true);
  Var weights = ops::matmul(used, tape.constant(head_spread_));
  Var agg = ops::scatter_rows(ops::mul(ops::gather_rows(z, g.src), weights), g.dst, g.num_nodes);
  if (cfg_.average_heads) return {ops::matmul(agg, tape.constant(head_mean_)), alpha};
  if (cfg_.node_residual) {
    agg = ops::add(agg, w_res_ ? ops::matmul(h, tape.parameter(*w_res_)) : h);
  }
  return {activate(agg, cfg_.activation), alpha};
}

}  // namespace hgb
