#pragma once

#include <string>

#include "evogcn/graph.hpp"

namespace evogcn {

// Timestamped edge-list ingestion. Line format:
//   source target weight timestamp [label]
// whitespace-separated; lines starting with '#' or '%' are comments.
struct IngestConfig {
  std::string path;
  int target_steps = 0;          // equal-width buckets to hit this count
  double granularity_seconds = 0;  // alternative: fixed seconds per snapshot
  bool directed = true;          // false: each line adds both directions
  std::string feature_path;      // optional: "node_id v1 ... vd" per line
  std::string node_label_path;   // optional: "node_id time_step class" per line
  int feature_cap = 100;         // degree one-hot cap when no feature file
  long limit_days = 0;           // keep only the first N days of data (0 = all)
};

struct IngestStats {
  long long lines = 0;            // parsed edge lines (after comment skip)
  long long aggregated = 0;       // duplicate (u,v) merged within a bucket
  int nodes = 0;
  int steps = 0;
};

TemporalGraph ingest_edge_list(const IngestConfig& config, IngestStats* stats = nullptr);

SplitRanges temporal_split(const TemporalGraph& tg, int train, int val, int test);

// Binary snapshot cache: <path> packed arrays + <path>.json manifest.
void save_snapshot_cache(const TemporalGraph& tg, const std::string& path);
TemporalGraph load_snapshot_cache(const std::string& path);

}  // namespace evogcn
