#include "hgb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hgb/errors.hpp"
#include "hgb/log.hpp"

namespace hgb {

using nlohmann::json;

namespace {

double f1(double tp, double fp, double fn) {
  const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

F1Scores from_counts(const std::vector<double>& tp, const std::vector<double>& fp, const std::vector<double>& fn) {
  F1Scores s;
  double TP = 0, FP = 0, FN = 0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    s.macro += f1(tp[c], fp[c], fn[c]);
    TP += tp[c];
    FP += fp[c];
    FN += fn[c];
  }
  s.macro /= static_cast<double>(tp.size());
  s.micro = f1(TP, FP, FN);
  return s;
}

}  // namespace

F1Scores macro_micro_f1(std::span<const Index> pred, std::span<const Index> truth, std::size_t num_classes) {
  if (pred.size() != truth.size()) throw ShapeError("f1: prediction and truth lengths differ");
  if (pred.empty()) throw ContractError("f1: empty input");
  if (num_classes == 0) throw ContractError("f1: no classes");
  std::vector<double> tp(num_classes), fp(num_classes), fn(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || truth[i] >= num_classes) throw IndexError("f1: class id out of range");
    if (pred[i] == truth[i]) {
      tp[pred[i]] += 1;
    } else {
      fp[pred[i]] += 1;
      fn[truth[i]] += 1;
    }
  }
  return from_counts(tp, fp, fn);
}

F1Scores macro_micro_f1(const std::vector<std::vector<Index>>& pred, const std::vector<std::vector<Index>>& truth,
                        std::size_t num_classes) {
  if (pred.size() != truth.size()) throw ShapeError("f1: prediction and truth lengths differ");
  if (pred.empty()) throw ContractError("f1: empty input");
  if (num_classes == 0) throw ContractError("f1: no classes");
  std::vector<double> tp(num_classes), fp(num_classes), fn(num_classes);
  std::vector<char> p(num_classes), t(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::fill(p.begin(), p.end(), 0);
    std::fill(t.begin(), t.end(), 0);
    for (Index c : pred[i]) p.at(c) = 1;
    for (Index c : truth[i]) t.at(c) = 1;
    for (std::size_t c = 0; c < num_classes; ++c) {
      tp[c] += p[c] && t[c];
      fp[c] += p[c] && !t[c];
      fn[c] += !p[c] && t[c];
    }
  }
  return from_counts(tp, fp, fn);
}

std::vector<std::vector<Index>> threshold_labels(const DenseMatrix& probs, double threshold) {
  std::vector<std::vector<Index>> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r)
    for (std::size_t c = 0; c < probs.cols(); ++c)
      if (probs(r, c) >= threshold) out[r].push_back(c);
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average 1-based ranks across tied blocks.
  double pos_rank_sum = 0.0;
  double P = 0, N = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        pos_rank_sum += avg_rank;
        P += 1;
      } else {
        N += 1;
      }
    }
    i = j;
  }
  if (P == 0 || N == 0) throw ContractError("roc_auc: labels contain a single class");
  return (pos_rank_sum - P * (P + 1) / 2.0) / (P * N);
}

double mrr_by_head(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw ContractError("mrr: no scored pairs");
  std::vector<Index> heads;
  std::map<Index, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [it, fresh] = groups.try_emplace(pairs[i].head);
    if (fresh) heads.push_back(pairs[i].head);
    it->second.push_back(i);
  }
  double total = 0.0;
  for (Index h : heads) {
    auto& idx = groups[h];
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[a].score > pairs[b].score; });
    std::size_t rank = 0;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (pairs[idx[r]].positive) {
        rank = r + 1;
        break;
      }
    }
    if (rank == 0) throw ContractError("mrr: head " + std::to_string(h) + " has no positive candidate");
    total += 1.0 / static_cast<double>(rank);
  }
  return total / static_cast<double>(heads.size());
}

std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude, std::size_t k) {
  std::vector<Index> cand;
  cand.reserve(scores.size());
  std::size_t e = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    while (e < exclude.size() && exclude[e] < i) ++e;
    if (e < exclude.size() && exclude[e] == i) continue;
    cand.push_back(i);
  }
  const std::size_t m = std::min(k, cand.size());
  auto better = [&](Index a, Index b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end(), better);
  cand.resize(m);
  return cand;
}

RankingScores ranking_at_k(const std::vector<std::vector<Index>>& ranked,
                           const std::vector<std::vector<Index>>& relevant, std::size_t k) {
  if (ranked.size() != relevant.size()) throw ShapeError("ranking metrics: user counts differ");
  if (k == 0) throw ContractError("ranking metrics: k must be positive");
  RankingScores s;
  for (std::size_t u = 0; u < ranked.size(); ++u) {
    if (relevant[u].empty()) {
      ++s.skipped_users;
      continue;
    }
    std::vector<Index> rel = relevant[u];
    std::sort(rel.begin(), rel.end());
    double hits = 0.0, dcg = 0.0, idcg = 0.0;
    const std::size_t depth = std::min(k, ranked[u].size());
    for (std::size_t r = 0; r < depth; ++r) {
      if (std::binary_search(rel.begin(), rel.end(), ranked[u][r])) {
        hits += 1.0;
        dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      }
    }
    for (std::size_t r = 0; r < std::min(rel.size(), k); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    s.recall += hits / static_cast<double>(rel.size());
    s.ndcg += dcg / idcg;
    ++s.users;
  }
  if (s.skipped_users > 0) {
    log_info("ranking metrics: skipped " + std::to_string(s.skipped_users) + " users without relevant items");
  }
  if (s.users > 0) {
    s.recall /= static_cast<double>(s.users);
    s.ndcg /= static_cast<double>(s.users);
  }
  return s;
}

double recall_at_k(const std::vector<std::vector<Index>>& ranked, const std::vector<std::vector<Index>>& relevant,
                   std::size_t k) {
  return ranking_at_k(ranked, relevant, k).recall;
}

double ndcg_at_k(const std::vector<std::vector<Index>>& ranked, const std::vector<std::vector<Index>>& relevant,
                 std::size_t k) {
  return ranking_at_k(ranked, relevant, k).ndcg;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

EvalReport aggregate(std::string task, std::string dataset, std::string model, std::vector<std::uint64_t> seeds,
                     const std::vector<std::map<std::string, double>>& per_seed, json config, double runtime_s) {
  if (per_seed.size() != seeds.size()) throw ContractError("aggregate: one metric map per seed required");
  EvalReport r{std::move(task), std::move(dataset), std::move(model), std::move(seeds), {}, std::move(config),
               runtime_s};
  for (std::size_t i = 0; i < per_seed.size(); ++i) {
    for (const auto& [name, value] : per_seed[i]) {
      auto& m = r.metrics[name];
      if (m.per_seed.size() != i) throw ContractError("aggregate: metric '" + name + "' missing for some seeds");
      m.per_seed.push_back(value);
    }
  }
  for (auto& [name, m] : r.metrics) {
    if (m.per_seed.size() != per_seed.size()) throw ContractError("aggregate: metric '" + name + "' missing for some seeds");
    m.mean = mean(m.per_seed);
    m.std = sample_std(m.per_seed);
  }
  return r;
}

json report_to_json(const EvalReport& r) {
  json j;
  j["task"] = r.task;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["seeds"] = r.seeds;
  j["metrics"] = json::object();
  for (const auto& [name, m] : r.metrics) {
    j["metrics"][name] = {{"per_seed", m.per_seed}, {"mean", m.mean}, {"std", m.std}};
  }
  j["std_convention"] = kStdConvention;
  j["config"] = r.config;
  j["runtime_s"] = r.runtime_s;
  return j;
}

EvalReport report_from_json(const json& j) {
  const auto problems = check_report_json(j);
  if (!problems.empty()) throw DataError("report: " + problems.front());
  EvalReport r;
  r.task = j.at("task");
  r.dataset = j.at("dataset");
  r.model = j.at("model");
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& [name, m] : j.at("metrics").items()) {
    r.metrics[name] = {m.at("per_seed").get<std::vector<double>>(), m.at("mean").get<double>(),
                       m.at("std").get<double>()};
  }
  r.config = j.at("config");
  r.runtime_s = j.at("runtime_s");
  return r;
}

std::vector<std::string> check_report_json(const json& j) {
  std::vector<std::string> p;
  if (!j.is_object()) return {"report is not an object"};
  for (const char* key : {"task", "dataset", "model"}) {
    if (!j.contains(key) || !j[key].is_string()) p.push_back(std::string("'") + key + "' must be a string");
  }
  std::size_t n_seeds = 0;
  if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty()) {
    p.push_back("'seeds' must be a non-empty array");
  } else {
    n_seeds = j["seeds"].size();
    for (const auto& s : j["seeds"])
      if (!s.is_number_integer()) p.push_back("'seeds' entries must be integers");
  }
  if (!j.contains("metrics") || !j["metrics"].is_object()) {
    p.push_back("'metrics' must be an object");
  } else {
    for (const auto& [name, m] : j["metrics"].items()) {
      if (!m.is_object() || !m.contains("per_seed") || !m["per_seed"].is_array() || !m.contains("mean") ||
          !m["mean"].is_number() || !m.contains("std") || !m["std"].is_number()) {
        p.push_back("metric '" + name + "' must have per_seed, mean and std");
        continue;
      }
      if (m["per_seed"].size() != n_seeds) p.push_back("metric '" + name + "' has a per_seed length != seeds");
    }
  }
  if (!j.contains("config") || !j["config"].is_object()) p.push_back("'config' must be an object");
  if (!j.contains("runtime_s") || !j["runtime_s"].is_number()) p.push_back("'runtime_s' must be a number");
  return p;
}

}  // namespace hgb
