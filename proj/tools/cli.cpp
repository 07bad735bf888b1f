#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hgb/graph_io.hpp"
#include "hgb/log.hpp"
#include "hgb/metapath.hpp"
#include "hgb/training.hpp"

namespace hgb::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string seeds;
  std::size_t parallel = 1;
};

void add_common(CLI::App& cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd.add_option("--config", c.config, "run config (JSON)");
  if (needs_config) opt->required();
  cmd.add_option("--set", c.sets, "override a config value, e.g. --set model.layers=2 (repeatable)");
  cmd.add_option("--out", c.out, "output directory");
  cmd.add_option("--seeds", c.seeds, "comma-separated seeds, replacing the config's list");
  cmd.add_option("--parallel", c.parallel, "seeds trained concurrently")->check(CLI::PositiveNumber);
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("--seeds: '" + item + "' is not a non-negative integer");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

RunConfig resolve_config(const Common& c) {
  std::ifstream in(c.config);
  if (!in) throw ConfigError("cannot open config " + c.config);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError(c.config + ": not a JSON object");
  for (const auto& s : c.sets) apply_override(j, s);
  RunConfig cfg = run_config_from_json(j);
  if (!c.seeds.empty()) cfg.seeds = parse_seeds(c.seeds);
  if (!c.out.empty()) cfg.out = c.out;
  cfg.check();
  return cfg;
}

fs::path require_out(const RunConfig& cfg, const char* verb) {
  if (cfg.out.empty()) throw ConfigError(std::string(verb) + " needs --out (or \"out\" in the config)");
  fs::create_directories(cfg.out);
  return cfg.out;
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

// Left-aligns to `width` display columns (setw counts bytes, not characters).
std::string pad(const std::string& s, std::size_t width) {
  std::size_t chars = 0;
  for (const unsigned char ch : s) chars += (ch & 0xC0) != 0x80;
  return s + std::string(width > chars ? width - chars : 0, ' ');
}

void print_report(const EvalReport& r, std::ostream& out) {
  out << r.model << " on " << r.dataset << " (" << r.task << "), " << r.seeds.size() << " seed(s), x100\n";
  std::size_t w = 6;
  for (const auto& [name, _] : r.metrics) w = std::max(w, name.size());
  for (const auto& [name, m] : r.metrics) {
    out << "  " << std::left << std::setw(static_cast<int>(w)) << name << "  " << pct(m.mean) << " ± " << pct(m.std)
        << '\n';
  }
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& dataset, const std::string& metapaths, bool reverse, std::ostream& out) {
  RunConfig probe;
  probe.dataset = dataset;
  probe.materialize_reverse = reverse;
  const HeteroGraph g = load_dataset(probe);
  g.validate();

  out << "dataset      " << (g.name.empty() ? dataset : g.name) << '\n';
  out << "node types   " << g.num_node_types() << '\n';
  out << "nodes        " << g.node_count() << '\n';
  out << "edge types   " << g.num_edge_types() << '\n';
  out << "edges        " << g.edges.size() << '\n';
  if (g.labels) {
    out << "classes      " << g.labels->num_classes << (g.labels->multi_label ? " (multi-label)" : "") << '\n';
    out << "labelled     " << g.labels->labelled_nodes().size() << '\n';
  }
  if (!g.task.empty()) out << "task         " << g.task.dump() << '\n';
  out << '\n';
  for (Index t = 0; t < g.num_node_types(); ++t) {
    const auto& nt = g.node_types[t];
    out << "  node " << std::left << std::setw(16) << nt.name << std::right << std::setw(9) << nt.count
        << "  features " << nt.feature_dim << '\n';
  }
  for (Index t = 0; t < g.num_edge_types(); ++t) {
    const auto& et = g.edge_types[t];
    out << "  edge " << std::left << std::setw(16) << et.name << std::right << std::setw(9) << g.count_edges_of_type(t)
        << "  " << g.node_types.at(et.src_type).name << " -> " << g.node_types.at(et.dst_type).name;
    if (et.reverse) out << "  (reverse " << *et.reverse << ")";
    out << '\n';
  }

  if (!metapaths.empty()) {
    std::ifstream in(metapaths);
    if (!in) throw DataError("cannot open " + metapaths);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("metapaths") || !j["metapaths"].is_object())
      throw DataError(metapaths + ": expected an object with a \"metapaths\" map");
    out << '\n';
    for (const auto& [name, steps] : j["metapaths"].items()) {
      const MetaPath p = metapath_from_names(g, steps.get<std::vector<std::string>>());
      const EdgeIndex nb = metapath_neighbor_graph(g, p);
      std::string types = g.node_types.at(g.edge_types.at(p.steps.front()).src_type).name;
      for (const Index s : p.steps) types += " > " + g.node_types.at(g.edge_types.at(s).dst_type).name;
      out << "  metapath " << std::left << std::setw(8) << name << std::right << std::setw(9) << nb.size()
          << " pairs  " << types << '\n';
    }
  }
  return kOk;
}

int cmd_split(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const fs::path dir = require_out(cfg, "split");
  const HeteroGraph g = load_dataset(cfg);
  for (const auto seed : cfg.seeds) {
    SplitSpec s;
    if (cfg.task == TaskKind::Rec) {
      s = prepare_rec(cfg, g, seed).split;
    } else {
      std::optional<LinkDecoderKind> dec;
      if (cfg.task == TaskKind::Link) dec = LinkDecoderKind::Dot;  // irrelevant to the split
      s = make_session(cfg, g, seed, std::nullopt, dec)->split();
    }
    const fs::path file = dir / ("split_seed" + std::to_string(seed) + ".json");
    write_json_file(split_to_json(s), file);
    out << "seed " << seed << ": train " << (s.train_nodes.size() + s.train_pairs.size()) << ", valid "
        << (s.valid_nodes.size() + s.valid_pairs.size()) << ", test " << (s.test_nodes.size() + s.test_pairs.size())
        << " -> " << file.string() << '\n';
  }
  return kOk;
}

int cmd_pretrain_mf(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  if (cfg.task != TaskKind::Rec) throw ConfigError("pretrain-mf needs a recommendation config");
  const fs::path dir = require_out(cfg, "pretrain-mf");
  const HeteroGraph g = load_dataset(cfg);
  for (const auto seed : cfg.seeds) {
    const RecData d = prepare_rec(cfg, g, seed);
    MfConfig m = cfg.mf;
    m.seed = derive_seed(seed, 4);
    const MfResult r = bpr_mf_pretrain(d.split.train_pairs, d.user_nodes.size(), d.item_nodes.size(), m);
    const std::string stem = "mf_seed" + std::to_string(seed);
    save_mf(r.embeddings, dir / (stem + ".bin"));
    save_mf_tsv(r.embeddings, dir / (stem + ".tsv"));
    out << "seed " << seed << ": " << d.user_nodes.size() << " users, " << d.item_nodes.size() << " items, d_mf "
        << m.dim << ", final loss " << (r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << " -> "
        << (dir / (stem + ".bin")).string() << '\n';
  }
  out << "use with --set rec.mf_path=" << (dir / "mf_seed{seed}.bin").string() << '\n';
  return kOk;
}

int cmd_train(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const fs::path dir = require_out(cfg, "train");
  const HeteroGraph g = load_dataset(cfg);
  for (const auto seed : cfg.seeds) {
    const fs::path run_dir = dir / ("seed_" + std::to_string(seed));
    const SeedResult r = run_seed(cfg, g, seed, run_dir);
    out << "seed " << seed << ": best epoch " << r.fit.best_epoch << "/" << r.fit.epochs;
    if (!r.decoder.empty()) out << ", decoder " << r.decoder;
    for (const auto& [k, v] : r.metrics) out << ", " << k << " " << pct(v);
    out << " -> " << run_dir.string() << '\n';
  }
  return kOk;
}

int cmd_eval(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  if (cfg.out.empty()) throw ConfigError("eval needs --out pointing at a train or benchmark output directory");
  const HeteroGraph g = load_dataset(cfg);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::map<std::string, double>> per_seed;
  for (const auto seed : cfg.seeds) per_seed.push_back(evaluate_run(cfg, g, fs::path(cfg.out) / ("seed_" + std::to_string(seed))));
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const EvalReport r = aggregate(to_string(cfg.task), g.name, to_string(cfg.encoder.model), cfg.seeds, per_seed,
                                 run_config_to_json(cfg), runtime);
  write_json_file(report_to_json(r), fs::path(cfg.out) / "eval.json");
  print_report(r, out);
  return kOk;
}

int cmd_benchmark(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const HeteroGraph g = load_dataset(cfg);
  const EvalReport r = run_benchmark(cfg, g, c.parallel);
  print_report(r, out);
  if (!cfg.out.empty()) out << "report: " << (fs::path(cfg.out) / "report.json").string() << '\n';
  return kOk;
}

const std::vector<std::string> kComponents = {"type_embedding", "l2_norm", "residuals"};

int cmd_ablate(const Common& c, const std::string& components, std::ostream& out) {
  const RunConfig base = resolve_config(c);
  if (base.encoder.model != ModelKind::SimpleHGN) throw ConfigError("ablate applies to simple-hgn configs");
  std::vector<std::string> removed;
  std::stringstream ss(components);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::find(kComponents.begin(), kComponents.end(), item) == kComponents.end())
      throw ConfigError("ablate: unknown component '" + item + "' (expected type_embedding, l2_norm or residuals)");
    if (std::find(removed.begin(), removed.end(), item) == removed.end()) removed.push_back(item);
  }
  const HeteroGraph g = load_dataset(base);

  struct Row {
    std::string label;
    EvalReport report;
  };
  std::vector<Row> rows;
  auto run = [&](const std::string& label, RunConfig cfg) {
    if (!base.out.empty()) cfg.out = (fs::path(base.out) / label).string();
    rows.push_back({label, run_benchmark(cfg, g, c.parallel)});
  };
  run("full", base);
  for (const auto& comp : removed) {
    RunConfig cfg = base;
    if (comp == "type_embedding") cfg.encoder.type_embedding = false;
    if (comp == "l2_norm") cfg.encoder.l2_norm = false;
    if (comp == "residuals") cfg.encoder.residuals = false;
    run("w/o " + comp, cfg);
  }

  // One row per variant, one column per metric.
  std::vector<std::string> cols;
  for (const auto& [name, _] : rows.front().report.metrics) cols.push_back(name);
  std::size_t lw = 8;
  for (const auto& r : rows) lw = std::max(lw, r.label.size());
  out << std::left << std::setw(static_cast<int>(lw)) << "variant";
  for (const auto& col : cols) out << "  " << pad(col, 18);
  out << '\n';
  json doc = json::array();
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(lw)) << r.label;
    for (const auto& col : cols) {
      const auto& m = r.report.metrics.at(col);
      out << "  " << pad(pct(m.mean) + " ± " + pct(m.std), 18);
    }
    out << '\n';
    doc.push_back({{"variant", r.label}, {"report", report_to_json(r.report)}});
  }
  if (!base.out.empty()) {
    fs::create_directories(base.out);
    write_json_file(doc, fs::path(base.out) / "ablation.json");
  }
  return kOk;
}

int cmd_negsample(const Common& c, const std::string& regime, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const fs::path dir = require_out(cfg, "negsample");
  const HeteroGraph g = load_dataset(cfg);
  for (const auto seed : cfg.seeds) {
    const auto pairs = sample_test_negatives(cfg, g, seed, regime);
    const fs::path file = dir / ("negatives_" + regime + "_seed" + std::to_string(seed) + ".tsv");
    save_pairs_tsv(pairs, file);
    out << "seed " << seed << ": " << pairs.size() << " " << regime << " negatives -> " << file.string() << '\n';
  }
  out << "use with --set link.test_negatives_file=" << (dir / ("negatives_" + regime + "_seed{seed}.tsv")).string()
      << '\n';
  return kOk;
}

LogLevel parse_level(const std::string& s) {
  if (s == "debug") return LogLevel::Debug;
  if (s == "info") return LogLevel::Info;
  if (s == "warn") return LogLevel::Warn;
  if (s == "error") return LogLevel::Error;
  return LogLevel::Off;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous graph benchmark toolkit"};
  app.name("hgb");
  app.require_subcommand(1);
  std::string level = "warn";
  app.add_option("--log-level", level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  std::string dataset, metapaths;
  bool no_reverse = false;
  auto* validate = app.add_subcommand("validate", "check a dataset directory and print its statistics");
  validate->add_option("dataset", dataset, "dataset directory or synthetic:<kind>")->required();
  validate->add_option("--metapaths", metapaths, "meta-path table (JSON) to resolve against the dataset");
  validate->add_flag("--no-reverse", no_reverse, "count edges as stored, without declared reverse edges");

  Common split_c, mf_c, train_c, eval_c, bench_c, ablate_c, neg_c;
  auto* split = app.add_subcommand("split", "write the split of every seed");
  add_common(*split, split_c);
  auto* mf = app.add_subcommand("pretrain-mf", "train BPR matrix factorisation on each seed's training pairs");
  add_common(*mf, mf_c);
  auto* train = app.add_subcommand("train", "train and test every seed, keeping checkpoints");
  add_common(*train, train_c);
  auto* eval = app.add_subcommand("eval", "re-evaluate checkpoints written by train or benchmark");
  add_common(*eval, eval_c);
  auto* bench = app.add_subcommand("benchmark", "train every seed and write an aggregated report");
  add_common(*bench, bench_c);
  std::string components = "type_embedding,l2_norm,residuals";
  auto* ablate = app.add_subcommand("ablate", "compare the full model with single components removed");
  add_common(*ablate, ablate_c);
  ablate->add_option("--components", components, "components to remove, comma-separated (empty: base run only)");
  std::string regime;
  auto* neg = app.add_subcommand("negsample", "write the test negatives of a link config");
  add_common(*neg, neg_c);
  neg->add_option("--regime", regime, "two_hop or random")->required()->check(CLI::IsMember({"two_hop", "random"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  set_log_level(parse_level(level));

  try {
    if (*validate) return cmd_validate(dataset, metapaths, !no_reverse, out);
    if (*split) return cmd_split(split_c, out);
    if (*mf) return cmd_pretrain_mf(mf_c, out);
    if (*train) return cmd_train(train_c, out);
    if (*eval) return cmd_eval(eval_c, out);
    if (*bench) return cmd_benchmark(bench_c, out);
    if (*ablate) return cmd_ablate(ablate_c, components, out);
    if (*neg) return cmd_negsample(neg_c, regime, out);
  } catch (const ConfigError& e) {
    err << "hgb: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "hgb: numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const DataError& e) {
    err << "hgb: data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    // Shape, index and contract violations surface from inconsistent inputs.
    err << "hgb: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace hgb::cli
