#include <cmath>

#include "hgb/errors.hpp"
#include "hgb/log.hpp"
#include "hgb/models.hpp"

namespace hgb {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GCN: return "gcn";
    case ModelKind::GAT: return "gat";
    case ModelKind::RGCN: return "rgcn";
    case ModelKind::SimpleHGN: return "simple-hgn";
  }
  return "simple-hgn";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gcn") return ModelKind::GCN;
  if (s == "gat") return ModelKind::GAT;
  if (s == "rgcn") return ModelKind::RGCN;
  if (s == "simple-hgn" || s == "simplehgn") return ModelKind::SimpleHGN;
  throw ContractError("unknown model '" + s + "' (expected gcn, gat, rgcn or simple-hgn)");
}

namespace {

// Width of layer l (per head for attention models).
std::size_t layer_width(const EncoderConfig& cfg, std::size_t l) {
  if (!cfg.layer_dims.empty()) return cfg.layer_dims.at(l);
  const bool last = l + 1 == cfg.num_layers;
  if (last && cfg.output_dim > 0) return cfg.output_dim;
  return cfg.hidden_dim;
}

}  // namespace

EncoderStack::EncoderStack(ParameterStore& store, const HeteroGraph& graph, const EncoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  if (!cfg_.layer_dims.empty()) cfg_.num_layers = cfg_.layer_dims.size();
  if (cfg_.num_layers == 0) throw ContractError("encoder needs at least one layer");
  if (cfg_.heads == 0) throw ContractError("encoder needs at least one attention head");
  if (cfg_.beta < 0.0 || cfg_.beta > 1.0) throw ContractError("beta must lie in [0, 1]");
  if (cfg_.task == TaskKind::Node && cfg_.output_dim == 0) {
    throw ContractError("node classification needs output_dim = number of classes");
  }
  // The link variant drops the edge residual.
  if (cfg_.task == TaskKind::Link) cfg_.beta = 0.0;
  if (!cfg_.residuals) cfg_.beta = 0.0;

  projector_ = std::make_unique<TypedProjector>(store, "input.", graph, apply_feature_mode(graph, cfg_.features),
                                                cfg_.input_dim, rng);
  mg_ = MessageGraph::from(graph);
  const std::size_t L = cfg_.num_layers;
  std::size_t in = cfg_.input_dim;
  std::size_t concat_width = cfg_.input_dim;
  for (std::size_t l = 0; l < L; ++l) {
    const bool last = l + 1 == L;
    const std::size_t w = layer_width(cfg_, l);
    const std::string name = "layer" + std::to_string(l);
    std::size_t out = 0;
    switch (cfg_.model) {
      case ModelKind::GCN:
        if (l == 0) adj_ = NormalizedAdjacency::from(graph);
        gcn_.push_back(std::make_unique<GCNLayer>(store, name, in, w, last ? Activation::Identity : Activation::ReLU, rng));
        out = w;
        break;
      case ModelKind::RGCN:
        rgcn_.push_back(
            std::make_unique<RGCNLayer>(store, name, graph, in, w, last ? Activation::Identity : Activation::ReLU, rng));
        out = w;
        break;
      case ModelKind::GAT:
        gat_.push_back(std::make_unique<GATLayer>(store, name, in, w, cfg_.heads, last, cfg_.slope,
                                                  last ? Activation::Identity : Activation::ELU, rng));
        out = gat_.back()->out_dim();
        break;
      case ModelKind::SimpleHGN: {
        SimpleHGNLayerConfig lc;
        lc.in_dim = in;
        lc.head_dim = w;
        lc.heads = cfg_.heads;
        lc.edge_dim = cfg_.edge_dim;
        lc.num_edge_types = mg_.num_edge_types;
        lc.slope = cfg_.slope;
        lc.beta = cfg_.beta;
        lc.average_heads = last;
        lc.node_residual = cfg_.residuals;
        lc.type_embedding = cfg_.type_embedding;
        hgn_.push_back(std::make_unique<SimpleHGNLayer>(store, name, lc, rng));
        out = hgn_.back()->out_dim();
        break;
      }
    }
    concat_width += out;
    in = out;
  }
  const bool concat_all = cfg_.task == TaskKind::Link && cfg_.model == ModelKind::SimpleHGN;
  out_dim_ = concat_all ? concat_width : in;
}

EncoderOutput EncoderStack::forward(Tape& tape, const HeteroGraph& graph, Rng& rng, bool training) const {
  EncoderOutput result;
  Var h = projector_->project(tape, graph);
  std::vector<Var> layer_outputs{h};
  std::optional<Var> prev_alpha;
  const std::size_t L = cfg_.num_layers;
  for (std::size_t l = 0; l < L; ++l) {
    Var x = ops::dropout(h, cfg_.feat_dropout, rng, training);
    switch (cfg_.model) {
      case ModelKind::GCN: h = gcn_[l]->forward(tape, adj_, x); break;
      case ModelKind::RGCN: h = rgcn_[l]->forward(tape, x); break;
      case ModelKind::GAT: h = gat_[l]->forward(tape, mg_, x, cfg_.attn_dropout, &rng, training); break;
      case ModelKind::SimpleHGN: {
        auto out = hgn_[l]->forward(tape, mg_, x, prev_alpha, cfg_.attn_dropout, &rng, training);
        h = out.h;
        prev_alpha = out.alpha;
        result.alphas.push_back(out.alpha);
        break;
      }
    }
    layer_outputs.push_back(h);
  }
  Var emb = h;
  if (cfg_.task == TaskKind::Link && cfg_.model == ModelKind::SimpleHGN) emb = ops::concat_cols(layer_outputs);
  if (cfg_.l2_norm) {
    std::size_t zero_rows = 0;
    const auto& v = emb.value();
    for (std::size_t r = 0; r < v.rows(); ++r) {
      double s = 0.0;
      for (double x : v.row(r)) s += x * x;
      if (std::sqrt(s) < 1e-12) ++zero_rows;
    }
    // Dropout can zero rows while training; only inference rows are suspicious.
    if (zero_rows > 0 && !training) {
      log_warn("encoder: " + std::to_string(zero_rows) + " output rows have zero norm; normalising with eps 1e-12");
    }
    emb = ops::l2_normalize_rows(emb, 1e-12);
  }
  result.embedding = emb;
  return result;
}

}  // namespace hgb
