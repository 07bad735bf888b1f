#pragma once

// On-disk dataset directory:
//   meta.json   {name, node_types:[{name,count,feature_dim}],
//                edge_types:[{name,src_type,dst_type,reverse?}], task:{...}}
//   nodes.tsv   node_id <TAB> type_name <TAB> comma-separated floats
//   edges.tsv   src_id <TAB> dst_id <TAB> edge_type_name
//   labels.tsv  node_id <TAB> class id, or comma-separated ids (optional)
// Ids are 0-based global integers; UTF-8 with LF line endings.

#include <filesystem>

#include "hgb/graph.hpp"

namespace hgb {

struct LoadOptions {
  // Add reverse edges for edge types that declare one.
  bool materialize_reverse = false;
};

/// Reads and validates a dataset directory. Malformed rows raise DataError
/// with "file:line:" prefixes.
HeteroGraph load_graph(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Writes a graph so that load_graph reproduces it exactly (floats are
/// written in shortest round-trip form). Graphs carrying the reserved
/// self-loop type are rejected.
void save_graph(const HeteroGraph& graph, const std::filesystem::path& dir);

}  // namespace hgb
