#include "hgb/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "hgb/errors.hpp"
#include "hgb/graph_io.hpp"
#include "hgb/kernels.hpp"
#include "hgb/log.hpp"
#include "hgb/synthetic.hpp"

namespace hgb {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::check() const {
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (encoder.beta < 0.0 || encoder.beta > 1.0) throw ConfigError("config: model.beta must lie in [0, 1]");
  if (!(lr > 0.0)) throw ConfigError("config: optim.lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("config: optim.weight_decay must be >= 0");
  if (max_epochs == 0) throw ConfigError("config: optim.max_epochs must be positive");
  if (feat < 0 || feat > 2) throw ConfigError("config: model.feat must be 0, 1 or 2");
  if (encoder.feat_dropout < 0.0 || encoder.feat_dropout >= 1.0 || encoder.attn_dropout < 0.0 ||
      encoder.attn_dropout >= 1.0) {
    throw ConfigError("config: dropout rates must lie in [0, 1)");
  }
  if (decoder != "auto" && decoder != "dot" && decoder != "distmult") {
    throw ConfigError("config: link.decoder must be dot, distmult or auto");
  }
  for (const auto* regime : {&train_negatives, &eval_negatives}) {
    if (*regime != "two_hop" && *regime != "random") {
      throw ConfigError("config: link negative regimes must be two_hop or random");
    }
  }
  if (valid_ratio <= 0.0 || valid_ratio >= 1.0) throw ConfigError("config: rec.valid_ratio must lie in (0, 1)");
  if (top_k == 0 || batch_size == 0) throw ConfigError("config: rec.top_k and rec.batch_size must be positive");
}

json run_config_to_json(const RunConfig& c) {
  const auto& e = c.encoder;
  return {
      {"name", c.name},
      {"task", to_string(c.task)},
      {"dataset", c.dataset},
      {"materialize_reverse", c.materialize_reverse},
      {"split_file", c.split_file},
      {"target",
       {{"node_type", c.target_node_type},
        {"edge_type", c.target_edge_type},
        {"user_type", c.user_type},
        {"item_type", c.item_type},
        {"interaction_edge_type", c.interaction_edge_type}}},
      {"model",
       {{"kind", to_string(e.model)},
        {"input_dim", e.input_dim},
        {"hidden_dim", e.hidden_dim},
        {"edge_dim", e.edge_dim},
        {"layers", e.num_layers},
        {"heads", e.heads},
        {"layer_dims", e.layer_dims},
        {"slope", e.slope},
        {"beta", e.beta},
        {"feat_dropout", e.feat_dropout},
        {"attn_dropout", e.attn_dropout},
        {"feat", c.feat},
        {"type_embedding", e.type_embedding},
        {"l2_norm", e.l2_norm},
        {"residuals", e.residuals}}},
      {"link",
       {{"decoder", c.decoder},
        {"train_negatives", c.train_negatives},
        {"eval_negatives", c.eval_negatives},
        {"test_negatives_file", c.test_negatives_file}}},
      {"rec",
       {{"mf_dim", c.mf.dim},
        {"mf_epochs", c.mf.epochs},
        {"mf_lr", c.mf.lr},
        {"mf_reg", c.mf.reg},
        {"mf_path", c.mf_path},
        {"batch_size", c.batch_size},
        {"top_k", c.top_k},
        {"valid_ratio", c.valid_ratio}}},
      {"optim",
       {{"lr", c.lr},
        {"weight_decay", c.weight_decay},
        {"patience", c.patience},
        {"max_epochs", c.max_epochs},
        {"grid_search", c.grid_search}}},
      {"seeds", c.seeds},
      {"out", c.out},
  };
}

namespace {

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // An integer slot may not take a fraction.
    return !(a.is_number_integer() && b.is_number_float());
  }
  return a.type() == b.type();
}

// Every key of `user` must exist in `defaults` with a compatible type.
void check_against(const json& defaults, const json& user, const std::string& path) {
  for (const auto& [key, value] : user.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!defaults.contains(key)) throw ConfigError("config: unknown key '" + where + "'");
    const json& d = defaults.at(key);
    if (d.is_object()) {
      if (!value.is_object()) throw ConfigError("config: '" + where + "' must be an object");
      check_against(d, value, where);
    } else if (!same_kind(d, value)) {
      throw ConfigError("config: '" + where + "' expects a " + std::string(d.type_name()) + ", got " +
                        std::string(value.type_name()));
    }
  }
}

template <typename T>
T get_as(const json& j, const char* path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + path + "'");
  }
}

}  // namespace

RunConfig run_config_from_json(const json& user) {
  if (!user.is_object()) throw ConfigError("config: top level must be an object");
  json j = run_config_to_json(RunConfig{});
  check_against(j, user, "");
  j.merge_patch(user);

  RunConfig c;
  c.name = j["name"];
  try {
    c.task = task_kind_from_string(j["task"]);
    c.encoder.model = model_kind_from_string(j["model"]["kind"]);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.dataset = j["dataset"];
  c.materialize_reverse = j["materialize_reverse"];
  c.split_file = j["split_file"];
  const auto& t = j["target"];
  c.target_node_type = t["node_type"];
  c.target_edge_type = t["edge_type"];
  c.user_type = t["user_type"];
  c.item_type = t["item_type"];
  c.interaction_edge_type = t["interaction_edge_type"];
  const auto& m = j["model"];
  auto& e = c.encoder;
  e.task = c.task;
  e.input_dim = get_as<std::size_t>(m["input_dim"], "model.input_dim");
  e.hidden_dim = get_as<std::size_t>(m["hidden_dim"], "model.hidden_dim");
  e.edge_dim = get_as<std::size_t>(m["edge_dim"], "model.edge_dim");
  e.num_layers = get_as<std::size_t>(m["layers"], "model.layers");
  e.heads = get_as<std::size_t>(m["heads"], "model.heads");
  e.layer_dims = get_as<std::vector<std::size_t>>(m["layer_dims"], "model.layer_dims");
  e.slope = m["slope"];
  e.beta = m["beta"];
  e.feat_dropout = m["feat_dropout"];
  e.attn_dropout = m["attn_dropout"];
  c.feat = m["feat"];
  e.type_embedding = m["type_embedding"];
  e.l2_norm = m["l2_norm"];
  e.residuals = m["residuals"];
  c.decoder = j["link"]["decoder"];
  c.train_negatives = j["link"]["train_negatives"];
  c.eval_negatives = j["link"]["eval_negatives"];
  c.test_negatives_file = j["link"]["test_negatives_file"];
  const auto& r = j["rec"];
  c.mf.dim = get_as<std::size_t>(r["mf_dim"], "rec.mf_dim");
  c.mf.epochs = get_as<std::size_t>(r["mf_epochs"], "rec.mf_epochs");
  c.mf.lr = r["mf_lr"];
  c.mf.reg = r["mf_reg"];
  c.mf_path = r["mf_path"];
  c.batch_size = get_as<std::size_t>(r["batch_size"], "rec.batch_size");
  c.top_k = get_as<std::size_t>(r["top_k"], "rec.top_k");
  c.valid_ratio = r["valid_ratio"];
  const auto& o = j["optim"];
  c.lr = o["lr"];
  c.weight_decay = o["weight_decay"];
  c.patience = get_as<std::size_t>(o["patience"], "optim.patience");
  c.max_epochs = get_as<std::size_t>(o["max_epochs"], "optim.max_epochs");
  c.grid_search = o["grid_search"];
  c.seeds = get_as<std::vector<std::uint64_t>>(j["seeds"], "seeds");
  c.out = j["out"];
  c.check();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  // Resolve against the full default shape so unset keys can be overridden.
  json resolved = run_config_to_json(RunConfig{});
  resolved.merge_patch(config);
  json* slot = &resolved;
  json* target = &config;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!slot->is_object() || !slot->contains(path[i])) throw ConfigError("override: unknown key '" + key + "'");
    slot = &(*slot)[path[i]];
    if (i + 1 < path.size()) {
      if (!target->contains(path[i])) (*target)[path[i]] = json::object();
      target = &(*target)[path[i]];
    }
  }
  if (slot->is_object()) throw ConfigError("override: '" + key + "' names a section, not a value");
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded() || (slot->is_string() && !value.is_string())) value = text;
  if (!same_kind(*slot, value)) {
    throw ConfigError("override: '" + key + "' expects a " + std::string(slot->type_name()) + ", got '" + text + "'");
  }
  (*target)[path.back()] = value;
}

HeteroGraph load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("config: dataset is not set");
  HeteroGraph g;
  const std::string prefix = "synthetic:";
  if (cfg.dataset.rfind(prefix, 0) == 0) {
    g = synthetic_graph(cfg.dataset.substr(prefix.size()));
  } else {
    g = load_graph(cfg.dataset, {.materialize_reverse = cfg.materialize_reverse});
  }
  return g;
}

void write_history_csv(const TrainHistory& history, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss,valid\n";
  out.precision(17);
  for (const auto& r : history) out << r.epoch << ',' << r.loss << ',' << r.valid << '\n';
}

// ---------------------------------------------------------------------------
// Early stopping and audit

bool EarlyStopper::observe(double score, std::size_t epoch, const ParameterStore& store) {
  if (snapshot_.empty() || score > best_) {
    best_ = score;
    best_epoch_ = epoch;
    since_ = 0;
    snapshot_ = store.snapshot();
    return false;
  }
  ++since_;
  return since_ >= patience_;
}

void EarlyStopper::restore(ParameterStore& store) const {
  if (!snapshot_.empty()) store.restore(snapshot_);
}

void LeakageAudit::touch_nodes(std::span<const Index> nodes) {
  for (Index v : nodes) {
    if (v >= nodes_.size()) nodes_.resize(v + 1, 0);
    nodes_[v] = 1;
  }
}

void LeakageAudit::touch_pairs(std::span<const NodePair> pairs) { pairs_.insert(pairs.begin(), pairs.end()); }

void LeakageAudit::expose_pairs(std::span<const NodePair> pairs) { exposed_.insert(pairs.begin(), pairs.end()); }

std::size_t LeakageAudit::leaks(const SplitSpec& split) const {
  std::size_t n = 0;
  for (Index v : split.test_nodes) n += v < nodes_.size() && nodes_[v];
  // Symmetric relations expose both orientations, so the stored one suffices.
  for (const auto& p : split.test_pairs) n += pairs_.count(p) + exposed_.count(p);
  return n;
}

// ---------------------------------------------------------------------------
// Session

std::string expand_seed(std::string path, std::uint64_t seed) {
  for (auto at = path.find("{seed}"); at != std::string::npos; at = path.find("{seed}"))
    path.replace(at, 6, std::to_string(seed));
  return path;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser over the combined value.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + salt + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Session::Session(const RunConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      store_(std::make_unique<ParameterStore>()),
      init_rng_(derive_seed(seed, 1)),
      train_rng_(derive_seed(seed, 2)) {
  cfg_.check();
}

void Session::optimize(Tape& tape, Var loss) {
  const double v = loss.value()(0, 0);
  if (!std::isfinite(v)) throw NumericError("training loss is not finite (" + std::to_string(v) + ")");
  store_->zero_grad();
  tape.backward(loss);
  const auto params = store_->trainable();
  adam_step(params, adam_, AdamConfig{.lr = cfg_.lr, .weight_decay = cfg_.weight_decay});
}

FitSummary Session::fit() {
  EarlyStopper stopper(cfg_.patience);
  FitSummary s;
  history_.clear();
  try {
    for (std::size_t epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
      const double loss = train_epoch(epoch);
      const double valid = validate();
      if (!std::isfinite(valid)) throw NumericError("validation score is not finite at epoch " + std::to_string(epoch));
      history_.push_back({epoch, loss, valid});
      s.epochs = epoch;
      log_debug("epoch " + std::to_string(epoch) + " loss " + std::to_string(loss) + " valid " + std::to_string(valid));
      if (stopper.observe(valid, epoch, *store_)) break;
    }
  } catch (const NumericError& e) {
    stopper.restore(*store_);
    throw NumericError(std::string(e.what()) + "; parameters restored to epoch " +
                       std::to_string(stopper.best_epoch()));
  }
  stopper.restore(*store_);
  s.best_valid = stopper.best();
  s.best_epoch = stopper.best_epoch();
  return s;
}

namespace {

Index resolve_node_type(const HeteroGraph& g, const std::string& configured, const char* meta_key) {
  std::string name = configured;
  if (name.empty() && g.task.contains(meta_key)) name = g.task.at(meta_key).get<std::string>();
  if (name.empty()) throw DataError(std::string("dataset does not name its ") + meta_key + " and the config sets none");
  return g.node_type_id(name);
}

Index resolve_edge_type(const HeteroGraph& g, const std::string& configured, const char* meta_key) {
  std::string name = configured;
  if (name.empty() && g.task.contains(meta_key)) name = g.task.at(meta_key).get<std::string>();
  if (name.empty()) throw DataError(std::string("dataset does not name its ") + meta_key + " and the config sets none");
  return g.edge_type_id(name);
}

EncoderConfig encoder_config(const RunConfig& cfg, std::vector<Index> feature_targets) {
  EncoderConfig e = cfg.encoder;
  e.task = cfg.task;
  e.features = feature_mode_from_int(cfg.feat, std::move(feature_targets));
  return e;
}

std::vector<NodePair> concat(std::span<const NodePair> a, std::span<const NodePair> b) {
  std::vector<NodePair> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

SplitSpec read_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("split file " + path + ": " + e.what());
  }
  return split_from_json(j);
}

}  // namespace

// ---------------------------------------------------------------------------
// Node classification

NodeSession::NodeSession(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                         std::optional<SplitSpec> split)
    : Session(cfg, seed), graph_(graph) {
  if (!graph.labels) throw DataError("node classification needs labels");
  target_ = resolve_node_type(graph, cfg.target_node_type, "target_type");
  split_ = split ? std::move(*split) : split_nodes(graph, kNodeSplitRatios, seed, target_);
  if (split_.task != TaskKind::Node) throw DataError("split is not a node-classification split");
  if (split_.train_nodes.empty() || split_.valid_nodes.empty()) {
    throw DataError("node split needs training and validation nodes");
  }
  auto e = encoder_config(cfg_, {target_});
  e.output_dim = graph.labels->num_classes;
  encoder_ = std::make_unique<EncoderStack>(*store_, graph, e, init_rng_);
}

double NodeSession::train_epoch(std::size_t) {
  Tape tape;
  auto out = encoder_->forward(tape, graph_, train_rng_, true);
  Var loss = classification_loss(out.embedding, split_.train_nodes, *graph_.labels);
  audit_.touch_nodes(split_.train_nodes);
  const double v = loss.value()(0, 0);
  optimize(tape, loss);
  return v;
}

DenseMatrix NodeSession::logits() {
  Tape tape;
  Rng unused(0);
  return encoder_->forward(tape, graph_, unused, false).embedding.value();
}

std::vector<std::vector<Index>> NodeSession::predict(const DenseMatrix& z, std::span<const Index> nodes) const {
  std::vector<std::vector<Index>> out;
  out.reserve(nodes.size());
  for (Index v : nodes) {
    const auto row = z.row(v);
    if (graph_.labels->multi_label) {
      std::vector<Index> set;
      // sigmoid(x) >= 0.5 exactly when x >= 0.
      for (Index c = 0; c < row.size(); ++c)
        if (row[c] >= 0.0) set.push_back(c);
      out.push_back(std::move(set));
    } else {
      out.push_back({static_cast<Index>(std::max_element(row.begin(), row.end()) - row.begin())});
    }
  }
  return out;
}

F1Scores NodeSession::f1_on(std::span<const Index> nodes) {
  const auto z = logits();
  std::vector<std::vector<Index>> truth;
  for (Index v : nodes) truth.push_back(graph_.labels->per_node.at(v));
  const std::size_t C = graph_.labels->num_classes;
  if (graph_.labels->multi_label) return macro_micro_f1(predict(z, nodes), truth, C);
  std::vector<Index> pred, gold;
  for (const auto& p : predict(z, nodes)) pred.push_back(p[0]);
  for (const auto& t : truth) gold.push_back(t[0]);
  return macro_micro_f1(pred, gold, C);
}

double NodeSession::accuracy_on(std::span<const Index> nodes) {
  const auto z = logits();
  const auto pred = predict(z, nodes);
  double hit = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto truth = graph_.labels->per_node.at(nodes[i]);
    std::sort(truth.begin(), truth.end());
    if (graph_.labels->multi_label) {
      hit += pred[i] == truth;
    } else {
      hit += pred[i][0] == truth[0];
    }
  }
  return nodes.empty() ? 0.0 : hit / static_cast<double>(nodes.size());
}

double NodeSession::validate() { return f1_on(split_.valid_nodes).micro; }

std::map<std::string, double> NodeSession::test() {
  const auto s = f1_on(split_.test_nodes);
  return {{"micro_f1", s.micro}, {"macro_f1", s.macro}};
}

// ---------------------------------------------------------------------------
// Link prediction

LinkSession::LinkSession(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed, LinkDecoderKind decoder,
                         std::optional<SplitSpec> split)
    : Session(cfg, seed) {
  etype_ = resolve_edge_type(graph, cfg.target_edge_type, "target_edge_type");
  if (split) {
    split_ = std::move(*split);
    if (split_.task != TaskKind::Link) throw DataError("split is not a link-prediction split");
    if (split_.target_edge_type && *split_.target_edge_type != etype_) {
      throw DataError("split targets a different edge type than the config");
    }
    train_graph_ = remove_edges(graph, etype_, concat(split_.valid_pairs, split_.test_pairs));
  } else {
    auto es = split_edges(graph, etype_, kEdgeSplitRatios, seed);
    split_ = std::move(es.spec);
    train_graph_ = std::move(es.train_graph);
  }
  split_.target_edge_type = etype_;

  const auto& info = graph.edge_types[etype_];
  const bool symmetric = info.reverse && *info.reverse == info.name;
  auto held_out = concat(split_.valid_pairs, split_.test_pairs);
  if (symmetric) {
    for (std::size_t i = 0, n = held_out.size(); i < n; ++i) held_out.push_back({held_out[i].second, held_out[i].first});
  }

  // Held-out negatives come from the full graph with every positive excluded.
  if (split_.valid_negatives.empty() || split_.test_negatives.empty()) {
    NegativeSampler full(graph, etype_);
    const bool two_hop = cfg.eval_negatives == "two_hop";
    if (split_.valid_negatives.empty()) {
      split_.valid_negatives = two_hop ? full.two_hop(split_.valid_pairs, derive_seed(seed, 11))
                                       : full.random(split_.valid_pairs, derive_seed(seed, 11));
    }
    if (split_.test_negatives.empty()) {
      split_.test_negatives = two_hop ? full.two_hop(split_.test_pairs, derive_seed(seed, 12))
                                      : full.random(split_.test_pairs, derive_seed(seed, 12));
    }
  }
  if (!cfg.test_negatives_file.empty()) split_.test_negatives = load_pairs_tsv(expand_seed(cfg.test_negatives_file, seed));

  sampler_ = std::make_unique<NegativeSampler>(train_graph_, etype_, held_out);
  audit_.expose_pairs(edges_of_type(train_graph_, etype_));

  auto e = encoder_config(cfg_, {info.src_type, info.dst_type});
  encoder_ = std::make_unique<EncoderStack>(*store_, train_graph_, e, init_rng_);
  decoder_ = std::make_unique<LinkDecoder>(*store_, decoder, encoder_->out_dim(), 1);
}

double LinkSession::train_epoch(std::size_t epoch) {
  const auto& pos = split_.train_pairs;
  const auto neg = cfg_.train_negatives == "two_hop" ? sampler_->two_hop(pos, derive_seed(seed_, 1000 + epoch))
                                                      : sampler_->random(pos, derive_seed(seed_, 1000 + epoch));
  if (sampler_->last_fallbacks() > 0) {
    log_debug("link training: " + std::to_string(sampler_->last_fallbacks()) + " heads fell back to uniform negatives");
  }
  std::vector<Index> heads, tails;
  heads.reserve(pos.size() + neg.size());
  tails.reserve(pos.size() + neg.size());
  for (const auto& [u, v] : pos) {
    heads.push_back(u);
    tails.push_back(v);
  }
  for (const auto& [u, v] : neg) {
    heads.push_back(u);
    tails.push_back(v);
  }
  DenseMatrix target(heads.size(), 1);
  for (std::size_t i = 0; i < pos.size(); ++i) target(i, 0) = 1.0;
  audit_.touch_pairs(pos);
  audit_.touch_pairs(neg);

  Tape tape;
  auto out = encoder_->forward(tape, train_graph_, train_rng_, true);
  Var loss = ops::bce_with_logits(decoder_->logits(tape, out.embedding, heads, tails), target);
  const double v = loss.value()(0, 0);
  optimize(tape, loss);
  return v;
}

DenseMatrix LinkSession::embeddings() {
  Tape tape;
  Rng unused(0);
  return encoder_->forward(tape, train_graph_, unused, false).embedding.value();
}

std::vector<double> LinkSession::score(const DenseMatrix& emb, std::span<const NodePair> pairs) const {
  return decoder_->score(emb, pairs);
}

double LinkSession::roc_auc_on(std::span<const NodePair> positives, std::span<const NodePair> negatives) {
  const auto emb = embeddings();
  auto s = score(emb, positives);
  const auto n = score(emb, negatives);
  std::vector<int> y(s.size(), 1);
  s.insert(s.end(), n.begin(), n.end());
  y.resize(s.size(), 0);
  return roc_auc(s, y);
}

std::map<std::string, double> LinkSession::evaluate(std::span<const NodePair> positives,
                                                    std::span<const NodePair> negatives) {
  const auto emb = embeddings();
  const auto ps = score(emb, positives);
  const auto ns = score(emb, negatives);
  std::vector<double> s(ps);
  s.insert(s.end(), ns.begin(), ns.end());
  std::vector<int> y(ps.size(), 1);
  y.resize(s.size(), 0);
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < positives.size(); ++i) pairs.push_back({positives[i].first, positives[i].second, ps[i], true});
  for (std::size_t i = 0; i < negatives.size(); ++i)
    pairs.push_back({negatives[i].first, negatives[i].second, ns[i], false});
  return {{"roc_auc", roc_auc(s, y)}, {"mrr", mrr_by_head(pairs)}};
}

double LinkSession::train_roc_auc() {
  const auto neg = sampler_->two_hop(split_.train_pairs, derive_seed(seed_, 13));
  return roc_auc_on(split_.train_pairs, neg);
}

double LinkSession::validate() { return roc_auc_on(split_.valid_pairs, split_.valid_negatives); }

std::map<std::string, double> LinkSession::test() { return evaluate(split_.test_pairs, split_.test_negatives); }

// ---------------------------------------------------------------------------
// Recommendation

RecData prepare_rec(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                    std::optional<SplitSpec> split) {
  RecData d;
  d.user_type = resolve_node_type(graph, cfg.user_type, "user_type");
  d.item_type = resolve_node_type(graph, cfg.item_type, "item_type");
  d.etype = resolve_edge_type(graph, cfg.interaction_edge_type, "interaction_edge_type");
  const auto& info = graph.edge_types[d.etype];
  if (info.src_type != d.user_type || info.dst_type != d.item_type) {
    throw DataError("interaction edge type must go from the user type to the item type");
  }
  d.user_nodes = graph.nodes_of_type(d.user_type);
  d.item_nodes = graph.nodes_of_type(d.item_type);
  const auto local = graph.local_indices();

  if (split) {
    d.split = std::move(*split);
    if (d.split.task != TaskKind::Rec) throw DataError("split is not a recommendation split");
  } else {
    std::set<NodePair> uniq;
    for (const auto& [u, i] : edges_of_type(graph, d.etype)) uniq.insert({local[u], local[i]});
    const std::vector<NodePair> pairs(uniq.begin(), uniq.end());
    if (pairs.empty()) throw DataError("recommendation dataset has no interactions");
    const auto outer = split_interactions(pairs, kInteractionTestRatio, seed);
    const auto inner = split_interactions(outer.train_pairs, cfg.valid_ratio, derive_seed(seed, 3));
    d.split.task = TaskKind::Rec;
    d.split.seed = seed;
    d.split.train_pairs = inner.train_pairs;
    d.split.valid_pairs = inner.test_pairs;
    d.split.test_pairs = outer.test_pairs;
  }
  d.split.target_edge_type = d.etype;
  for (const auto* list : {&d.split.train_pairs, &d.split.valid_pairs, &d.split.test_pairs}) {
    for (const auto& [u, i] : *list) {
      if (u >= d.user_nodes.size() || i >= d.item_nodes.size()) throw DataError("recommendation split id out of range");
    }
  }
  std::vector<NodePair> held_out;
  for (const auto* list : {&d.split.valid_pairs, &d.split.test_pairs}) {
    for (const auto& [u, i] : *list) held_out.push_back({d.user_nodes[u], d.item_nodes[i]});
  }
  d.train_graph = remove_edges(graph, d.etype, held_out);
  return d;
}

RecSession::RecSession(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                       std::optional<SplitSpec> split, std::optional<MfEmbeddings> pretrained)
    : Session(cfg, seed), data_(prepare_rec(cfg, graph, seed, std::move(split))) {
  const std::size_t U = data_.user_nodes.size(), I = data_.item_nodes.size();
  if (pretrained) {
    mf_ = std::move(*pretrained);
  } else if (!cfg.mf_path.empty()) {
    const fs::path p(expand_seed(cfg.mf_path, seed));
    mf_ = p.extension() == ".tsv" ? load_mf_tsv(p) : load_mf(p);
  } else {
    MfConfig m = cfg.mf;
    m.seed = derive_seed(seed, 4);
    mf_ = bpr_mf_pretrain(data_.split.train_pairs, U, I, m).embeddings;
  }
  if (mf_.users.rows() != U || mf_.items.rows() != I) {
    throw DataError("pretrained factors cover " + std::to_string(mf_.users.rows()) + " users / " +
                    std::to_string(mf_.items.rows()) + " items, dataset has " + std::to_string(U) + " / " +
                    std::to_string(I));
  }
  fit_items_.assign(U, {});
  for (const auto& [u, i] : data_.split.train_pairs) fit_items_[u].push_back(i);
  for (auto& v : fit_items_) std::sort(v.begin(), v.end());

  std::vector<NodePair> exposed;
  const auto local = graph.local_indices();
  for (const auto& [u, i] : edges_of_type(data_.train_graph, data_.etype)) exposed.push_back({local[u], local[i]});
  audit_.expose_pairs(exposed);

  auto e = encoder_config(cfg_, {data_.user_type, data_.item_type});
  encoder_ = std::make_unique<EncoderStack>(*store_, data_.train_graph, e, init_rng_);
  scorer_ = std::make_unique<RecScorer>(*store_, mf_);
}

double RecSession::train_epoch(std::size_t) {
  std::vector<NodePair> order = data_.split.train_pairs;
  train_rng_.shuffle(std::span<NodePair>(order));
  const std::size_t I = data_.item_nodes.size();
  // Items held out for a user are never drawn as that user's negatives.
  std::vector<std::vector<Index>> known(fit_items_);
  for (const auto* list : {&data_.split.valid_pairs, &data_.split.test_pairs})
    for (const auto& [u, i] : *list) known[u].push_back(i);
  for (auto& v : known) std::sort(v.begin(), v.end());

  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t b = 0; b < order.size(); b += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), b + cfg_.batch_size);
    std::vector<Index> users, items, negs;
    std::vector<NodePair> touched;
    for (std::size_t k = b; k < end; ++k) {
      const auto [u, i] = order[k];
      const auto& seen = known[u];
      if (seen.size() >= I) continue;  // user interacted with every item
      Index j = 0;
      do {
        j = static_cast<Index>(train_rng_.below(I));
      } while (std::binary_search(seen.begin(), seen.end(), j));
      users.push_back(u);
      items.push_back(i);
      negs.push_back(j);
      touched.push_back({u, i});
      touched.push_back({u, j});
    }
    if (users.empty()) continue;
    audit_.touch_pairs(touched);
    Tape tape;
    auto out = encoder_->forward(tape, data_.train_graph, train_rng_, true);
    Var pos = scorer_->score(tape, out.embedding, users, items, data_.user_nodes, data_.item_nodes);
    Var neg = scorer_->score(tape, out.embedding, users, negs, data_.user_nodes, data_.item_nodes);
    Var loss = bpr_loss(pos, neg);
    total += loss.value()(0, 0);
    ++batches;
    optimize(tape, loss);
  }
  return batches ? total / static_cast<double>(batches) : 0.0;
}

DenseMatrix RecSession::score_all() {
  Tape tape;
  Rng unused(0);
  const auto emb = encoder_->forward(tape, data_.train_graph, unused, false).embedding.value();
  const auto u = kernels::parallel::gather_rows(emb, data_.user_nodes);
  const auto i = kernels::parallel::gather_rows(emb, data_.item_nodes);
  auto s = kernels::parallel::matmul_nt(u, i);
  const auto b = kernels::parallel::matmul_nt(mf_.users, mf_.items);
  for (std::size_t k = 0; k < s.size(); ++k) s.values()[k] += b.values()[k];
  return s;
}

RankingScores RecSession::rank(std::span<const NodePair> relevant, std::span<const NodePair> exclude, std::size_t k) {
  const auto scores = score_all();
  const std::size_t U = data_.user_nodes.size();
  std::vector<std::vector<Index>> rel(U), ex(U);
  for (const auto& [u, i] : relevant) rel[u].push_back(i);
  for (const auto& [u, i] : exclude) ex[u].push_back(i);
  std::vector<std::vector<Index>> ranked(U);
  for (Index u = 0; u < U; ++u) {
    if (rel[u].empty()) continue;
    std::sort(ex[u].begin(), ex[u].end());
    ranked[u] = top_k(scores.row(u), ex[u], k);
  }
  return ranking_at_k(ranked, rel, k);
}

double RecSession::validate() {
  return rank(data_.split.valid_pairs, data_.split.train_pairs, cfg_.top_k).recall;
}

std::map<std::string, double> RecSession::test() {
  const auto exclude = concat(data_.split.train_pairs, data_.split.valid_pairs);
  const auto s = rank(data_.split.test_pairs, exclude, cfg_.top_k);
  const std::string k = std::to_string(cfg_.top_k);
  return {{"recall@" + k, s.recall}, {"ndcg@" + k, s.ndcg}};
}

// ---------------------------------------------------------------------------
// Orchestration

std::unique_ptr<Session> make_session(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                                      std::optional<SplitSpec> split, std::optional<LinkDecoderKind> decoder) {
  switch (cfg.task) {
    case TaskKind::Node: return std::make_unique<NodeSession>(cfg, graph, seed, std::move(split));
    case TaskKind::Link: {
      if (!decoder) {
        if (cfg.decoder == "auto") throw ConfigError("make_session: choose dot or distmult explicitly");
        decoder = link_decoder_from_string(cfg.decoder);
      }
      return std::make_unique<LinkSession>(cfg, graph, seed, *decoder, std::move(split));
    }
    case TaskKind::Rec: return std::make_unique<RecSession>(cfg, graph, seed, std::move(split));
  }
  throw ConfigError("unknown task");
}

namespace {

std::optional<SplitSpec> configured_split(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.split_file.empty()) return std::nullopt;
  return read_split(expand_seed(cfg.split_file, seed));
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

SeedResult run_seed(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                    const std::optional<fs::path>& run_dir) {
  std::vector<std::optional<LinkDecoderKind>> candidates{std::nullopt};
  if (cfg.task == TaskKind::Link) {
    candidates.clear();
    if (cfg.decoder == "auto") {
      candidates = {LinkDecoderKind::Dot, LinkDecoderKind::DistMult};
    } else {
      candidates = {link_decoder_from_string(cfg.decoder)};
    }
  }
  if (run_dir) fs::create_directories(*run_dir);

  std::unique_ptr<Session> best;
  FitSummary best_fit;
  for (const auto& kind : candidates) {
    auto session = make_session(cfg, graph, seed, configured_split(cfg, seed), kind);
    FitSummary fit;
    try {
      fit = session->fit();
    } catch (const NumericError&) {
      if (run_dir) session->store().save(*run_dir / "checkpoint.lastgood.bin");
      throw;
    }
    if (kind && candidates.size() > 1) {
      log_info("seed " + std::to_string(seed) + ": decoder " + to_string(*kind) + " best valid " +
               std::to_string(fit.best_valid));
    }
    if (!best || fit.best_valid > best_fit.best_valid) {
      best = std::move(session);
      best_fit = fit;
    }
  }

  SeedResult r;
  r.seed = seed;
  r.fit = best_fit;
  r.history = best->history();
  r.split = best->split();
  r.metrics = best->test();
  r.metrics["valid_" + best->valid_metric()] = best_fit.best_valid;
  if (auto* link = dynamic_cast<LinkSession*>(best.get())) r.decoder = to_string(link->decoder_kind());
  r.leaks = best->audit().leaks(r.split);
  if (r.leaks > 0) log_error("seed " + std::to_string(seed) + ": " + std::to_string(r.leaks) + " test items reached training");

  if (run_dir) {
    best->store().save(*run_dir / "checkpoint.bin");
    write_json(split_to_json(r.split), *run_dir / "split.json");
    write_history_csv(r.history, *run_dir / "history.csv");
    write_json({{"seed", seed},
                {"decoder", r.decoder},
                {"best_epoch", best_fit.best_epoch},
                {"epochs", best_fit.epochs},
                {"metrics", r.metrics},
                {"leaks", r.leaks}},
               *run_dir / "run.json");
  }
  return r;
}

std::map<std::string, double> evaluate_run(const RunConfig& cfg, const HeteroGraph& graph, const fs::path& run_dir) {
  std::ifstream in(run_dir / "run.json");
  if (!in) throw DataError("no run.json in " + run_dir.string());
  json meta;
  in >> meta;
  const std::uint64_t seed = meta.at("seed");
  std::optional<LinkDecoderKind> decoder;
  if (cfg.task == TaskKind::Link) decoder = link_decoder_from_string(meta.at("decoder").get<std::string>());
  auto session = make_session(cfg, graph, seed, read_split((run_dir / "split.json").string()), decoder);
  session->store().load(run_dir / "checkpoint.bin");
  return session->test();
}

EvalReport run_benchmark(const RunConfig& input, const HeteroGraph& graph, std::size_t parallel,
                         std::vector<SeedResult>* details) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg = input;
  cfg.check();
  if (cfg.grid_search) {
    const auto grid = grid_search(cfg, graph, cfg.seeds.front());
    cfg.lr = grid.front().lr;
    cfg.weight_decay = grid.front().weight_decay;
    log_info("grid search picked lr " + std::to_string(cfg.lr) + ", weight decay " + std::to_string(cfg.weight_decay));
    cfg.grid_search = false;
  }
  const std::size_t n = cfg.seeds.size();
  std::vector<SeedResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      std::optional<fs::path> dir;
      if (!cfg.out.empty()) dir = fs::path(cfg.out) / ("seed_" + std::to_string(cfg.seeds[i]));
      results[i] = run_seed(cfg, graph, cfg.seeds[i], dir);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallel, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(m);
            if (next == n) return;
            i = next++;
          }
          work(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::map<std::string, double>> per_seed;
  for (const auto& r : results) per_seed.push_back(r.metrics);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto report = aggregate(to_string(cfg.task), graph.name, to_string(cfg.encoder.model), cfg.seeds, per_seed,
                          run_config_to_json(cfg), runtime);
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    write_json(report_to_json(report), fs::path(cfg.out) / "report.json");
  }
  if (details) *details = std::move(results);
  return report;
}

std::vector<GridPoint> grid_search(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed) {
  std::vector<double> lrs, wds{0.0};
  for (double p : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2})
    for (double m : {1.0, 5.0}) lrs.push_back(m * p);
  for (double p : {1e-6, 1e-5, 1e-4, 1e-3})
    for (double m : {1.0, 2.0, 5.0}) wds.push_back(m * p);
  std::vector<GridPoint> out;
  for (double lr : lrs) {
    for (double wd : wds) {
      RunConfig c = cfg;
      c.lr = lr;
      c.weight_decay = wd;
      c.grid_search = false;
      std::optional<LinkDecoderKind> dec;
      if (c.task == TaskKind::Link && c.decoder == "auto") dec = LinkDecoderKind::DistMult;
      auto s = make_session(c, graph, seed, configured_split(c, seed), dec);
      try {
        out.push_back({lr, wd, s->fit().best_valid});
      } catch (const NumericError&) {
        out.push_back({lr, wd, -1.0});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GridPoint& a, const GridPoint& b) { return a.valid > b.valid; });
  return out;
}

std::vector<NodePair> sample_test_negatives(const RunConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                                            const std::string& regime) {
  if (cfg.task != TaskKind::Link) throw ConfigError("negative sampling needs a link-prediction config");
  const Index etype = resolve_edge_type(graph, cfg.target_edge_type, "target_edge_type");
  SplitSpec spec = cfg.split_file.empty() ? split_edges(graph, etype, kEdgeSplitRatios, seed).spec
                                          : read_split(expand_seed(cfg.split_file, seed));
  NegativeSampler full(graph, etype);
  const std::uint64_t s = derive_seed(seed, 12);
  if (regime == "two_hop") return full.two_hop(spec.test_pairs, s);
  if (regime == "random") return full.random(spec.test_pairs, s);
  throw ConfigError("unknown negative regime '" + regime + "' (expected two_hop or random)");
}

void save_pairs_tsv(std::span<const NodePair> pairs, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [u, v] : pairs) out << u << '\t' << v << '\n';
}

std::vector<NodePair> load_pairs_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<NodePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long u = -1, v = -1;
    if (!(ss >> u >> v) || u < 0 || v < 0) {
      throw DataError(path.filename().string() + ":" + std::to_string(lineno) + ": expected two node ids");
    }
    out.push_back({static_cast<Index>(u), static_cast<Index>(v)});
  }
  return out;
}

}  // namespace hgb
