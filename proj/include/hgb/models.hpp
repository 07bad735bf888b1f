#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hgb/graph.hpp"
#include "hgb/ops.hpp"
#include "hgb/parameters.hpp"
#include "hgb/preprocess.hpp"
#include "hgb/split.hpp"
#include "hgb/tape.hpp"

namespace hgb {

enum class Activation { Identity, ReLU, ELU };

Var activate(Var x, Activation act);

/// Typed message-passing structure: the graph's edges plus one self-loop per
/// node under a dedicated type. Edge-type ids index the attention embeddings.
struct MessageGraph {
  std::size_t num_nodes = 0;
  std::size_t num_edge_types = 0;  // includes the self-loop type
  std::vector<Index> src, dst, etype;

  std::size_t num_edges() const { return src.size(); }
  static MessageGraph from(const HeteroGraph& graph);
  // Throws ContractError if some node has no incoming edge.
  void require_in_edges(const char* who) const;
};

/// Symmetrically normalised adjacency with self-connections,
/// D^-1/2 (A + I) D^-1/2, over the undirected, type-free edge set.
struct NormalizedAdjacency {
  std::size_t num_nodes = 0;
  std::vector<Index> src, dst;
  std::vector<double> weight;

  static NormalizedAdjacency from(const HeteroGraph& graph);
};

class GCNLayer {
 public:
  GCNLayer(ParameterStore& store, const std::string& name, std::size_t in_dim, std::size_t out_dim,
           Activation act, Rng& rng);
  Var forward(Tape& tape, const NormalizedAdjacency& adj, Var h) const;
  Parameter& weight() const { return *w_; }
  std::size_t out_dim() const { return w_->value.cols(); }

 private:
  Parameter* w_;
  Activation act_;
};

/// Multi-head GAT layer. Hidden layers concatenate heads; a final layer
/// averages them.
class GATLayer {
 public:
  GATLayer(ParameterStore& store, const std::string& name, std::size_t in_dim, std::size_t head_dim,
           std::size_t heads, bool average_heads, double slope, Activation act, Rng& rng);

  // Per-edge attention, E x K.
  Var attention(Tape& tape, const MessageGraph& g, Var h) const;
  Var forward(Tape& tape, const MessageGraph& g, Var h, double attn_dropout = 0.0, Rng* rng = nullptr,
              bool training = false) const;

  std::size_t heads() const { return w_.size(); }
  Parameter& weight(std::size_t k) const { return *w_[k]; }
  // 1 x 2d_h, laid out as [dst half | src half].
  Parameter& attn(std::size_t k) const { return *a_[k]; }
  std::size_t out_dim() const;

 private:
  std::vector<Var> transform(Tape& tape, const MessageGraph& g, Var h) const;
  Var head_attention(Tape& tape, const MessageGraph& g, const std::vector<Var>& z) const;

  std::vector<Parameter*> w_, a_;
  bool average_;
  double slope_;
  Activation act_;
};

class RGCNLayer {
 public:
  // One weight per relation (edge types of the raw graph) plus a self weight.
  RGCNLayer(ParameterStore& store, const std::string& name, const HeteroGraph& graph, std::size_t in_dim,
            std::size_t out_dim, Activation act, Rng& rng);
  Var forward(Tape& tape, Var h) const;
  Parameter& relation_weight(Index r) const { return *w_r_.at(r); }
  Parameter& self_weight() const { return *w_0_; }
  std::size_t out_dim() const { return w_0_->value.cols(); }

 private:
  struct Relation {
    std::vector<Index> src, dst;
    DenseMatrix inv_count;  // E_r x 1, 1 / |N_i^r| of the edge's destination
  };
  std::size_t num_nodes_;
  std::vector<Relation> relations_;
  std::vector<Parameter*> w_r_;
  Parameter* w_0_;
  Activation act_;
};

struct SimpleHGNLayerConfig {
  std::size_t in_dim = 0;
  std::size_t head_dim = 0;
  std::size_t heads = 1;
  std::size_t edge_dim = 0;
  std::size_t num_edge_types = 0;  // including the self-loop type
  double slope = 0.2;
  double beta = 0.0;
  bool average_heads = false;      // final layer: mean over heads, no residual
  bool node_residual = true;
  bool type_embedding = true;      // false: r_psi fixed at zero and frozen
  Activation activation = Activation::ELU;
};

struct LayerOutput {
  Var h;
  Var alpha;  // E x K, the attention actually used
};

class SimpleHGNLayer {
 public:
  SimpleHGNLayer(ParameterStore& store, const std::string& name, const SimpleHGNLayerConfig& cfg, Rng& rng);

  /// Raw attention softmax(LeakyReLU(a^T [W h_i || W h_j || W_r r_psi])) per
  /// destination, combined with prev_alpha as (1-beta) a_hat + beta prev.
  Var attention(Tape& tape, const MessageGraph& g, Var z, const std::optional<Var>& prev_alpha) const;

  LayerOutput forward(Tape& tape, const MessageGraph& g, Var h, const std::optional<Var>& prev_alpha,
                      double attn_dropout = 0.0, Rng* rng = nullptr, bool training = false) const;

  const SimpleHGNLayerConfig& config() const { return cfg_; }
  std::size_t out_dim() const { return cfg_.average_heads ? cfg_.head_dim : cfg_.heads * cfg_.head_dim; }
  // d_in x K d_h, head k in columns [k d_h, (k+1) d_h).
  Parameter& weight() const { return *w_; }
  // 1 x K d_h each: attention vector parts for destination, source, edge type.
  Parameter& attn_dst() const { return *a_dst_; }
  Parameter& attn_src() const { return *a_src_; }
  Parameter& attn_edge() const { return *a_edge_; }
  Parameter& edge_embedding() const { return *r_; }
  Parameter& edge_weight() const { return *w_r_; }
  Parameter* residual_weight() const { return w_res_; }

 private:
  SimpleHGNLayerConfig cfg_;
  Parameter *w_, *a_dst_, *a_src_, *a_edge_, *r_, *w_r_;
  Parameter* w_res_ = nullptr;  // null: identity residual, or none
  DenseMatrix head_sum_;        // K d_h x K, sums each head's block
  DenseMatrix head_spread_;     // K x K d_h, repeats a head's value over its block
  DenseMatrix head_mean_;       // K d_h x d_h, averages heads
};

enum class ModelKind { GCN, GAT, RGCN, SimpleHGN };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct EncoderConfig {
  ModelKind model = ModelKind::SimpleHGN;
  TaskKind task = TaskKind::Node;
  std::size_t input_dim = 64;       // d0, shared projection width
  std::size_t hidden_dim = 64;      // d, per head
  std::size_t edge_dim = 64;        // d_e
  std::size_t num_layers = 3;       // L, including the output layer
  std::size_t heads = 8;            // K
  std::vector<std::size_t> layer_dims;  // explicit per-layer widths (overrides hidden_dim)
  std::size_t output_dim = 0;       // final width; node task: number of classes
  double slope = 0.05;
  double beta = 0.05;
  double feat_dropout = 0.5;
  double attn_dropout = 0.5;
  bool type_embedding = true;
  bool l2_norm = true;
  bool residuals = true;
  FeatureMode features;
};

struct EncoderOutput {
  Var embedding;            // N x out_dim
  std::vector<Var> alphas;  // per attention layer
};

/// Input projection followed by the configured stack. Node and rec tasks emit
/// the final (head-averaged) layer; the link task emits the concatenation of
/// the projected input and every layer's output. With l2_norm the result is
/// row-normalised.
class EncoderStack {
 public:
  EncoderStack(ParameterStore& store, const HeteroGraph& graph, const EncoderConfig& cfg, Rng& rng);

  EncoderOutput forward(Tape& tape, const HeteroGraph& graph, Rng& rng, bool training) const;

  const EncoderConfig& config() const { return cfg_; }
  std::size_t out_dim() const { return out_dim_; }
  const TypedProjector& projector() const { return *projector_; }
  const std::vector<std::unique_ptr<SimpleHGNLayer>>& hgn_layers() const { return hgn_; }
  const MessageGraph& message_graph() const { return mg_; }

 private:
  EncoderConfig cfg_;
  std::unique_ptr<TypedProjector> projector_;
  MessageGraph mg_;
  NormalizedAdjacency adj_;
  std::vector<std::unique_ptr<GCNLayer>> gcn_;
  std::vector<std::unique_ptr<GATLayer>> gat_;
  std::vector<std::unique_ptr<RGCNLayer>> rgcn_;
  std::vector<std::unique_ptr<SimpleHGNLayer>> hgn_;
  std::size_t out_dim_ = 0;
};

}  // namespace hgb
