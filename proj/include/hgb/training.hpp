#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hgb/adam.hpp"
#include "hgb/decoders.hpp"
#include "hgb/errors.hpp"
#include "hgb/metrics.hpp"
#include "hgb/models.hpp"
#include "hgb/sampling.hpp"
#include "hgb/split.hpp"

namespace hgb {

// Malformed or mistyped run configuration; the CLI maps it to a usage error.
class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Everything a run needs. Serialised as nested JSON (see run_config_to_json);
/// `--set a.b=value` overrides address that JSON.
struct RunConfig {
  std::string name = "run";
  TaskKind task = TaskKind::Node;
  // Dataset directory, or "synthetic:<node|dblp|link|rec>".
  std::string dataset;
  bool materialize_reverse = true;
  // Optional split JSON; when empty the split is generated from the seed.
  // In every file path below "{seed}" expands to the run seed.
  std::string split_file;

  // Targets. Empty strings fall back to the dataset's task metadata.
  std::string target_node_type;
  std::string target_edge_type;
  std::string user_type, item_type, interaction_edge_type;

  EncoderConfig encoder;
  int feat = 0;

  // Link prediction.
  std::string decoder = "auto";  // dot, distmult or auto (best on validation)
  std::string train_negatives = "two_hop";  // two_hop or random, redrawn every epoch
  std::string eval_negatives = "two_hop";   // two_hop or random
  std::string test_negatives_file;  // overrides the split's test negatives

  // Recommendation.
  MfConfig mf;
  std::string mf_path;  // pretrained factors (.bin or .tsv); trained when empty
  std::size_t batch_size = 2048;
  std::size_t top_k = 20;
  double valid_ratio = 0.1;

  double lr = 5e-4;
  double weight_decay = 1e-4;
  std::size_t patience = 30;
  std::size_t max_epochs = 1000;
  bool grid_search = false;

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out;

  // Throws ConfigError when an invariant is broken.
  void check() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
/// Missing keys take defaults; unknown keys and mistyped values throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies "dotted.key=value" to a config JSON. The key must exist in the
/// resolved config and the value must have the same JSON type.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Loads cfg.dataset (directory or synthetic generator).
HeteroGraph load_dataset(const RunConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double valid = 0.0;
};
using TrainHistory = std::vector<EpochRecord>;

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

/// Patience-based early stopping on a higher-is-better score. Only strict
/// improvements reset the counter and replace the snapshot.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Records the score of `epoch`; returns true when training should stop.
  bool observe(double score, std::size_t epoch, const ParameterStore& store);
  void restore(ParameterStore& store) const;

  bool has_snapshot() const { return !snapshot_.empty(); }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t since_improvement() const { return since_; }

 private:
  std::size_t patience_;
  double best_ = -1.0;
  std::size_t best_epoch_ = 0;
  std::size_t since_ = 0;
  ParameterStore::Snapshot snapshot_;
};

/// Records every node id and (head, tail) pair whose label enters a loss and
/// every target-relation pair visible to message passing, so they can be
/// intersected with the test split.
class LeakageAudit {
 public:
  void touch_nodes(std::span<const Index> nodes);
  void touch_pairs(std::span<const NodePair> pairs);
  void expose_pairs(std::span<const NodePair> pairs);

  /// Number of test nodes / test pairs that were touched or exposed.
  std::size_t leaks(const SplitSpec& split) const;

 private:
  std::vector<char> nodes_;
  std::set<NodePair> pairs_;
  std::set<NodePair> exposed_;
};

struct FitSummary {
  double best_valid = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
};

/// One seed of one task: owns the split, parameters and optimiser state.
class Session {
 public:
  virtual ~Session() = default;

  virtual const SplitSpec& split() const = 0;
  // One epoch of parameter updates; returns the mean training loss.
  virtual double train_epoch(std::size_t epoch) = 0;
  // Deterministic validation score (higher is better).
  virtual double validate() = 0;
  virtual std::map<std::string, double> test() = 0;
  virtual std::string valid_metric() const = 0;

  /// Epoch loop with early stopping; restores the best-validation snapshot.
  /// A non-finite loss or gradient restores the last good snapshot and
  /// rethrows as NumericError.
  FitSummary fit();

  ParameterStore& store() { return *store_; }
  const TrainHistory& history() const { return history_; }
  const LeakageAudit& audit() const { return audit_; }
  std::uint64_t seed() const { return seed_; }
  const RunConfig& config() const { return cfg_; }

 protected:
  Session(const RunConfig& cfg, std::uint64_t seed);
  // backward + Adam step on every trainable parameter.
  void optimize(Tape& tape, Var loss);

  RunConfig cfg_;
  std::uint64_t seed_;
  std::unique_ptr<ParameterStore> store_;
  Rng init_rng_, train_rng_;
  AdamState adam_;
  TrainHistory history_;
  LeakageAudit audit_;
};

/// Replaces every "{seed}" in a configured path.
std::string expand_seed(std::string path, std::uint64_t seed);

/// Deterministic seed derivation for per-purpose streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

class NodeSession : public Session {
 public:
  NodeSession(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
              std::optional<SplitSpec> split = std::nullopt);

  const SplitSpec& split() const override { return split_; }
  double train_epoch(std::size_t epoch) override;
  double validate() override;
  std::map<std::string, double> test() override;
  std::string valid_metric() const override { return "micro_f1"; }

  /// Inference-mode logits for every node.
  DenseMatrix logits();
  F1Scores f1_on(std::span<const Index> nodes);
  // Fraction of nodes whose predicted label set equals the truth.
  double accuracy_on(std::span<const Index> nodes);
  Index target_type() const { return target_; }
  const EncoderStack& encoder() const { return *encoder_; }

 private:
  std::vector<std::vector<Index>> predict(const DenseMatrix& logits, std::span<const Index> nodes) const;

  const HeteroGraph& graph_;
  Index target_;
  SplitSpec split_;
  std::unique_ptr<EncoderStack> encoder_;
};

class LinkSession : public Session {
 public:
  LinkSession(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed, LinkDecoderKind decoder,
              std::optional<SplitSpec> split = std::nullopt);

  const SplitSpec& split() const override { return split_; }
  double train_epoch(std::size_t epoch) override;
  double validate() override;
  std::map<std::string, double> test() override;
  std::string valid_metric() const override { return "roc_auc"; }

  /// Inference-mode embeddings computed on the training graph.
  DenseMatrix embeddings();
  std::vector<double> score(const DenseMatrix& emb, std::span<const NodePair> pairs) const;
  double roc_auc_on(std::span<const NodePair> positives, std::span<const NodePair> negatives);
  /// ROC-AUC and MRR of positives against the given negatives.
  std::map<std::string, double> evaluate(std::span<const NodePair> positives, std::span<const NodePair> negatives);
  /// Training pairs against freshly drawn 2-hop negatives (capacity check).
  double train_roc_auc();

  LinkDecoderKind decoder_kind() const { return decoder_->kind(); }
  Index target_edge_type() const { return etype_; }
  const HeteroGraph& train_graph() const { return train_graph_; }
  const EncoderStack& encoder() const { return *encoder_; }

 private:
  Index etype_;
  SplitSpec split_;
  HeteroGraph train_graph_;
  std::unique_ptr<NegativeSampler> sampler_;
  std::unique_ptr<EncoderStack> encoder_;
  std::unique_ptr<LinkDecoder> decoder_;
};

/// Resolved recommendation data: type-local (user, item) pairs per split and
/// the graph with held-out interactions removed.
struct RecData {
  Index user_type = 0, item_type = 0, etype = 0;
  std::vector<Index> user_nodes, item_nodes;  // local index -> global node id
  SplitSpec split;                            // train = fit, valid, test; local ids
  HeteroGraph train_graph;
};

RecData prepare_rec(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                    std::optional<SplitSpec> split = std::nullopt);

class RecSession : public Session {
 public:
  RecSession(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
             std::optional<SplitSpec> split = std::nullopt, std::optional<MfEmbeddings> pretrained = std::nullopt);

  const SplitSpec& split() const override { return data_.split; }
  double train_epoch(std::size_t epoch) override;
  double validate() override;
  std::map<std::string, double> test() override;
  std::string valid_metric() const override { return "recall@" + std::to_string(cfg_.top_k); }

  /// users x items inference scores.
  DenseMatrix score_all();
  /// Ranking metrics of `relevant` pairs, excluding `exclude` pairs from the candidates.
  RankingScores rank(std::span<const NodePair> relevant, std::span<const NodePair> exclude, std::size_t k);
  const RecData& data() const { return data_; }
  const MfEmbeddings& pretrained() const { return mf_; }
  const RecScorer& scorer() const { return *scorer_; }

 private:
  RecData data_;
  MfEmbeddings mf_;
  std::vector<std::vector<Index>> fit_items_;  // sorted per user
  std::unique_ptr<EncoderStack> encoder_;
  std::unique_ptr<RecScorer> scorer_;
};

/// Builds the session for cfg.task. `decoder` applies to link prediction
/// (defaults to cfg.decoder, which must not be "auto" here).
std::unique_ptr<Session> make_session(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                                      std::optional<SplitSpec> split = std::nullopt,
                                      std::optional<LinkDecoderKind> decoder = std::nullopt);

struct SeedResult {
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;  // test metrics plus valid_<metric>
  FitSummary fit;
  TrainHistory history;
  SplitSpec split;
  std::string decoder;  // link only
  std::size_t leaks = 0;
};

/// Split, train (selecting the link decoder when cfg.decoder is "auto") and
/// test one seed. With `run_dir` the checkpoint, split, history and a
/// run.json are written there.
SeedResult run_seed(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                    const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Reloads a run directory written by run_seed and re-evaluates its test split.
std::map<std::string, double> evaluate_run(const RunConfig& cfg, const HeteroGraph& graph,
                                           const std::filesystem::path& run_dir);

/// Every seed of cfg.seeds, up to `parallel` at a time, merged in seed order.
/// Per-seed directories go under cfg.out when it is set.
EvalReport run_benchmark(const RunConfig& cfg, const HeteroGraph& graph, std::size_t parallel = 1,
                         std::vector<SeedResult>* details = nullptr);

struct GridPoint {
  double lr = 0.0;
  double weight_decay = 0.0;
  double valid = 0.0;
};

/// lr in {1,5} x 10^{-6..-2}, weight decay in {0,1,2,5} x 10^{-6..-3},
/// each scored by best validation on `seed`. Returns all points, best first.
std::vector<GridPoint> grid_search(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed);

/// Writes a 1:1 negative set for the test positives of cfg's link split.
std::vector<NodePair> sample_test_negatives(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                                            const std::string& regime);
void save_pairs_tsv(std::span<const NodePair> pairs, const std::filesystem::path& path);
std::vector<NodePair> load_pairs_tsv(const std::filesystem::path& path);

}  // namespace hgb
