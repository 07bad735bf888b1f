#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "hgb/graph.hpp"
#include "hgb/ops.hpp"
#include "hgb/parameters.hpp"
#include "hgb/tape.hpp"

namespace hgb {

/// Single-label: softmax cross-entropy averaged over `rows`. Multi-label:
/// sigmoid binary cross-entropy averaged over rows x classes.
Var classification_loss(Var logits, std::span<const Index> rows, const Labels& labels);

/// Multi-hot targets for the given rows.
DenseMatrix multi_hot(std::span<const Index> rows, const Labels& labels);

double sigmoid(double x);
double dot_score(std::span<const double> u, std::span<const double> v);
double distmult_score(std::span<const double> u, std::span<const double> v, std::span<const double> r);

enum class LinkDecoderKind { Dot, DistMult };

std::string to_string(LinkDecoderKind kind);
LinkDecoderKind link_decoder_from_string(const std::string& s);

/// Scores (head, tail) pairs from node embeddings. DistMult keeps one
/// diagonal relation vector per target relation, initialised to ones.
class LinkDecoder {
 public:
  LinkDecoder(ParameterStore& store, LinkDecoderKind kind, std::size_t dim, std::size_t num_relations = 1);

  /// Raw (pre-sigmoid) scores, pairs x 1.
  Var logits(Tape& tape, Var emb, std::span<const Index> heads, std::span<const Index> tails,
             Index relation = 0) const;
  /// Raw scores without recording anything.
  std::vector<double> score(const DenseMatrix& emb, std::span<const NodePair> pairs, Index relation = 0) const;

  LinkDecoderKind kind() const { return kind_; }
  Parameter* relation(Index r) const { return relations_.empty() ? nullptr : relations_.at(r); }

 private:
  LinkDecoderKind kind_;
  std::size_t dim_;
  std::vector<Parameter*> relations_;
};

/// Mean of -log sigmoid(f_pos - f_neg).
Var bpr_loss(Var f_pos, Var f_neg);

/// Pretrained BPR-MF factors, indexed by position within the user and item
/// node types.
struct MfEmbeddings {
  DenseMatrix users;
  DenseMatrix items;

  std::size_t dim() const { return users.cols(); }
  friend bool operator==(const MfEmbeddings&, const MfEmbeddings&) = default;
};

// Binary: "HGBMF001", u64 d_mf, u64 n_users, u64 n_items, users then items as
// row-major f64.
void save_mf(const MfEmbeddings& mf, const std::filesystem::path& path);
MfEmbeddings load_mf(const std::filesystem::path& path);
// Debug form: "user|item <TAB> index <TAB> comma-separated values" per row.
void save_mf_tsv(const MfEmbeddings& mf, const std::filesystem::path& path);
MfEmbeddings load_mf_tsv(const std::filesystem::path& path);

struct MfConfig {
  std::size_t dim = 64;
  std::size_t epochs = 50;
  double lr = 0.05;
  double reg = 1e-4;
  std::uint64_t seed = 0;
};

struct MfResult {
  MfEmbeddings embeddings;
  std::vector<double> epoch_loss;
};

/// SGD on the BPR loss over (user, item) pairs given as type-local indices.
/// Each epoch visits the positives in a fresh order with one uniformly drawn
/// unobserved item per positive. Users or items absent from the pairs keep a
/// zero row (with a warning).
MfResult bpr_mf_pretrain(std::span<const NodePair> user_item, std::size_t num_users, std::size_t num_items,
                         const MfConfig& cfg);

/// f(u, v) = o_u . o_v + e_u . e_v with frozen pretrained e.
class RecScorer {
 public:
  RecScorer(ParameterStore& store, const MfEmbeddings& mf);

  /// users / items are type-local indices; user_nodes / item_nodes map them
  /// to rows of emb. Returns pairs x 1 raw scores.
  Var score(Tape& tape, Var emb, std::span<const Index> users, std::span<const Index> items,
            std::span<const Index> user_nodes, std::span<const Index> item_nodes) const;

  double bias(Index user, Index item) const;
  const Parameter& user_bias() const { return *users_; }
  const Parameter& item_bias() const { return *items_; }

 private:
  Parameter* users_;
  Parameter* items_;
};

}  // namespace hgb
