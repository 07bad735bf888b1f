#include "hgb/decoders.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "hgb/errors.hpp"
#include "hgb/log.hpp"
#include "hgb/rng.hpp"

namespace hgb {

DenseMatrix multi_hot(std::span<const Index> rows, const Labels& labels) {
  DenseMatrix t(rows.size(), labels.num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index c : labels.per_node.at(rows[i])) {
      if (c >= labels.num_classes) {
        throw IndexError("label " + std::to_string(c) + " >= number of classes " + std::to_string(labels.num_classes));
      }
      t(i, c) = 1.0;
    }
  }
  return t;
}

Var classification_loss(Var logits, std::span<const Index> rows, const Labels& labels) {
  if (logits.cols() != labels.num_classes) {
    throw ShapeError("classification logits have " + std::to_string(logits.cols()) + " columns for " +
                     std::to_string(labels.num_classes) + " classes");
  }
  if (labels.multi_label) return ops::bce_with_logits(ops::gather_rows(logits, rows), multi_hot(rows, labels));
  std::vector<Index> y;
  y.reserve(rows.size());
  for (Index v : rows) {
    if (!labels.has(v)) throw ContractError("node " + std::to_string(v) + " has no label");
    y.push_back(labels.per_node[v].front());
  }
  return ops::softmax_cross_entropy(logits, rows, y);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot_score(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("dot_score: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return sigmoid(s);
}

double distmult_score(std::span<const double> u, std::span<const double> v, std::span<const double> r) {
  if (u.size() != v.size() || u.size() != r.size()) throw ShapeError("distmult_score: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * r[i] * v[i];
  return sigmoid(s);
}

std::string to_string(LinkDecoderKind kind) { return kind == LinkDecoderKind::Dot ? "dot" : "distmult"; }

LinkDecoderKind link_decoder_from_string(const std::string& s) {
  if (s == "dot") return LinkDecoderKind::Dot;
  if (s == "distmult") return LinkDecoderKind::DistMult;
  throw ContractError("unknown decoder '" + s + "' (expected dot or distmult)");
}

LinkDecoder::LinkDecoder(ParameterStore& store, LinkDecoderKind kind, std::size_t dim, std::size_t num_relations)
    : kind_(kind), dim_(dim) {
  if (kind == LinkDecoderKind::DistMult) {
    for (std::size_t r = 0; r < num_relations; ++r) {
      relations_.push_back(&store.add("decoder.R" + std::to_string(r), DenseMatrix(1, dim, 1.0)));
    }
  }
}

Var LinkDecoder::logits(Tape& tape, Var emb, std::span<const Index> heads, std::span<const Index> tails,
                        Index relation) const {
  if (emb.cols() != dim_) throw ShapeError("link decoder: embedding width " + std::to_string(emb.cols()) +
                                           ", expected " + std::to_string(dim_));
  Var h = ops::gather_rows(emb, heads);
  Var t = ops::gather_rows(emb, tails);
  if (kind_ == LinkDecoderKind::DistMult) {
    if (relation >= relations_.size()) throw IndexError("link decoder: unknown relation " + std::to_string(relation));
    h = ops::mul_row(h, tape.parameter(*relations_[relation]));
  }
  return ops::row_dot(h, t);
}

std::vector<double> LinkDecoder::score(const DenseMatrix& emb, std::span<const NodePair> pairs, Index relation) const {
  if (kind_ == LinkDecoderKind::DistMult && relation >= relations_.size()) {
    throw IndexError("link decoder: unknown relation " + std::to_string(relation));
  }
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    const auto a = emb.row(u), b = emb.row(v);
    double s = 0.0;
    if (kind_ == LinkDecoderKind::DistMult) {
      const auto r = relations_[relation]->value.row(0);
      for (std::size_t i = 0; i < dim_; ++i) s += a[i] * r[i] * b[i];
    } else {
      for (std::size_t i = 0; i < dim_; ++i) s += a[i] * b[i];
    }
    out.push_back(s);
  }
  return out;
}

Var bpr_loss(Var f_pos, Var f_neg) { return ops::scale(ops::mean(ops::log_sigmoid(ops::sub(f_pos, f_neg))), -1.0); }

namespace {

constexpr char kMfMagic[8] = {'H', 'G', 'B', 'M', 'F', '0', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void save_mf(const MfEmbeddings& mf, const std::filesystem::path& path) {
  if (mf.users.cols() != mf.items.cols()) throw ShapeError("save_mf: user and item widths differ");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMfMagic, sizeof kMfMagic);
  write_u64(out, mf.users.cols());
  write_u64(out, mf.users.rows());
  write_u64(out, mf.items.rows());
  out.write(reinterpret_cast<const char*>(mf.users.data()), static_cast<std::streamsize>(mf.users.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(mf.items.data()), static_cast<std::streamsize>(mf.items.size() * sizeof(double)));
}

MfEmbeddings load_mf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing pretrained embedding file " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMfMagic, sizeof magic) != 0) throw DataError(path.string() + ": bad magic");
  const auto d = read_u64(in), nu = read_u64(in), ni = read_u64(in);
  if (!in) throw DataError(path.string() + ": truncated header");
  MfEmbeddings mf{DenseMatrix(nu, d), DenseMatrix(ni, d)};
  in.read(reinterpret_cast<char*>(mf.users.data()), static_cast<std::streamsize>(mf.users.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(mf.items.data()), static_cast<std::streamsize>(mf.items.size() * sizeof(double)));
  if (!in) throw DataError(path.string() + ": truncated data");
  return mf;
}

void save_mf_tsv(const MfEmbeddings& mf, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  auto dump = [&](const char* tag, const DenseMatrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      out << tag << '\t' << r << '\t';
      for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
      out << '\n';
    }
  };
  dump("user", mf.users);
  dump("item", mf.items);
}

MfEmbeddings load_mf_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file " + path.string());
  std::vector<std::vector<double>> users, items;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag, idx, values;
    if (!std::getline(ls, tag, '\t') || !std::getline(ls, idx, '\t') || !std::getline(ls, values)) {
      throw DataError(path.filename().string() + ":" + std::to_string(no) + ": expected 3 fields");
    }
    auto& rows = tag == "user" ? users : items;
    const std::size_t r = std::stoul(idx);
    if (rows.size() <= r) rows.resize(r + 1);
    std::istringstream vs(values);
    std::string tok;
    while (std::getline(vs, tok, ',')) rows[r].push_back(std::stod(tok));
  }
  auto to_matrix = [](const std::vector<std::vector<double>>& rows) {
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    DenseMatrix m(rows.size(), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != d) throw DataError("pretrained TSV: ragged rows");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  };
  return {to_matrix(users), to_matrix(items)};
}

MfResult bpr_mf_pretrain(std::span<const NodePair> user_item, std::size_t num_users, std::size_t num_items,
                         const MfConfig& cfg) {
  if (user_item.empty()) throw ContractError("bpr_mf_pretrain: no interactions");
  if (cfg.dim == 0 || cfg.lr <= 0.0) throw ContractError("bpr_mf_pretrain: dim and lr must be positive");
  std::vector<std::unordered_set<Index>> seen(num_users);
  std::vector<char> user_seen(num_users, 0), item_seen(num_items, 0);
  for (const auto& [u, i] : user_item) {
    if (u >= num_users || i >= num_items) throw IndexError("bpr_mf_pretrain: interaction out of range");
    seen[u].insert(i);
    user_seen[u] = item_seen[i] = 1;
  }
  Rng rng(cfg.seed);
  MfResult res{{DenseMatrix(num_users, cfg.dim), DenseMatrix(num_items, cfg.dim)}, {}};
  auto& P = res.embeddings.users;
  auto& Q = res.embeddings.items;
  std::size_t cold_users = 0, cold_items = 0;
  for (Index u = 0; u < num_users; ++u) {
    if (!user_seen[u]) {
      ++cold_users;
      continue;
    }
    for (double& v : P.row(u)) v = rng.uniform(-0.1, 0.1);
  }
  for (Index i = 0; i < num_items; ++i) {
    if (!item_seen[i]) {
      ++cold_items;
      continue;
    }
    for (double& v : Q.row(i)) v = rng.uniform(-0.1, 0.1);
  }
  if (cold_users || cold_items) {
    log_warn("bpr_mf_pretrain: " + std::to_string(cold_users) + " users and " + std::to_string(cold_items) +
             " items have no training interaction; their rows stay zero");
  }

  std::vector<NodePair> order(user_item.begin(), user_item.end());
  std::vector<double> pu(cfg.dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<NodePair>(order));
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& [u, i] : order) {
      if (seen[u].size() >= num_items) continue;
      Index j;
      do {
        j = rng.below(num_items);
      } while (seen[u].count(j));
      auto p = P.row(u), qi = Q.row(i), qj = Q.row(j);
      double x = 0.0;
      for (std::size_t c = 0; c < cfg.dim; ++c) x += p[c] * (qi[c] - qj[c]);
      total += -std::log(sigmoid(x));
      ++count;
      const double g = sigmoid(-x);
      std::copy(p.begin(), p.end(), pu.begin());
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        p[c] += cfg.lr * (g * (qi[c] - qj[c]) - cfg.reg * p[c]);
        qi[c] += cfg.lr * (g * pu[c] - cfg.reg * qi[c]);
        // Items a user never saw but that are cold overall stay zero.
        if (item_seen[j]) qj[c] += cfg.lr * (-g * pu[c] - cfg.reg * qj[c]);
      }
    }
    res.epoch_loss.push_back(count ? total / static_cast<double>(count) : 0.0);
  }
  return res;
}

RecScorer::RecScorer(ParameterStore& store, const MfEmbeddings& mf) {
  if (mf.users.cols() != mf.items.cols()) throw ShapeError("pretrained user and item widths differ");
  users_ = &store.add("rec.bias.users", mf.users, false);
  items_ = &store.add("rec.bias.items", mf.items, false);
}

Var RecScorer::score(Tape& tape, Var emb, std::span<const Index> users, std::span<const Index> items,
                     std::span<const Index> user_nodes, std::span<const Index> item_nodes) const {
  if (users.size() != items.size()) throw ShapeError("rec score: users and items differ in length");
  std::vector<Index> u_rows, i_rows;
  DenseMatrix bias(users.size(), 1);
  for (std::size_t k = 0; k < users.size(); ++k) {
    if (users[k] >= user_nodes.size() || items[k] >= item_nodes.size()) {
      throw IndexError("rec score: user or item index out of range");
    }
    u_rows.push_back(user_nodes[users[k]]);
    i_rows.push_back(item_nodes[items[k]]);
    bias(k, 0) = this->bias(users[k], items[k]);
  }
  Var f = ops::row_dot(ops::gather_rows(emb, u_rows), ops::gather_rows(emb, i_rows));
  return ops::add(f, tape.constant(std::move(bias)));
}

double RecScorer::bias(Index user, Index item) const {
  if (user >= users_->value.rows() || item >= items_->value.rows()) {
    throw IndexError("no pretrained row for user " + std::to_string(user) + " / item " + std::to_string(item));
  }
  double s = 0.0;
  const auto a = users_->value.row(user), b = items_->value.row(item);
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

}  // namespace hgb
