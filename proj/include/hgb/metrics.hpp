#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hgb/dense_matrix.hpp"
#include "json.hpp"

namespace hgb {

struct F1Scores {
  double macro = 0.0;
  double micro = 0.0;
};

/// Per-class F1 averaged over all num_classes classes (a class absent from
/// both prediction and truth scores 0); micro pools TP/FP/FN. 0/0 counts as 0.
F1Scores macro_micro_f1(std::span<const Index> pred, std::span<const Index> truth, std::size_t num_classes);
/// Multi-label form over label sets (thresholded predictions).
F1Scores macro_micro_f1(const std::vector<std::vector<Index>>& pred, const std::vector<std::vector<Index>>& truth,
                        std::size_t num_classes);

/// Label sets from per-class probabilities: class c is predicted when p >= threshold.
std::vector<std::vector<Index>> threshold_labels(const DenseMatrix& probs, double threshold = 0.5);

/// Probability that a random positive outranks a random negative, ties 1/2.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ScoredPair {
  Index head = 0;
  Index tail = 0;
  double score = 0.0;
  bool positive = false;
};

/// Mean over heads of 1 / rank of the best-ranked positive. Candidates are
/// sorted by score descending; equal scores keep their input order.
double mrr_by_head(std::span<const ScoredPair> pairs);

/// Top-k item ids by descending score, skipping `exclude` (sorted ascending).
/// Ties go to the lower item id.
std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude, std::size_t k);

struct RankingScores {
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t users = 0;          // users that contributed
  std::size_t skipped_users = 0;  // users without relevant items
};

/// recall@k = |top-k ∩ relevant| / |relevant|; ndcg@k with binary gain and
/// 1/log2(rank+1) discount, normalised by the ideal min(|relevant|, k)
/// placements. Both averaged over users with a non-empty relevant set.
RankingScores ranking_at_k(const std::vector<std::vector<Index>>& ranked,
                           const std::vector<std::vector<Index>>& relevant, std::size_t k);
double recall_at_k(const std::vector<std::vector<Index>>& ranked, const std::vector<std::vector<Index>>& relevant,
                   std::size_t k = 20);
double ndcg_at_k(const std::vector<std::vector<Index>>& ranked, const std::vector<std::vector<Index>>& relevant,
                 std::size_t k = 20);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> values);

struct MetricSummary {
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;
};

struct EvalReport {
  std::string task, dataset, model;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, MetricSummary> metrics;
  nlohmann::json config = nlohmann::json::object();
  double runtime_s = 0.0;
};

inline constexpr const char* kStdConvention = "sample";

/// per_seed[i] holds every metric of run i (same keys in every run).
EvalReport aggregate(std::string task, std::string dataset, std::string model, std::vector<std::uint64_t> seeds,
                     const std::vector<std::map<std::string, double>>& per_seed, nlohmann::json config,
                     double runtime_s);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
/// Empty when j has the documented report shape; otherwise one message per problem.
std::vector<std::string> check_report_json(const nlohmann::json& j);

}  // namespace hgb
