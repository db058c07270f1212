#include "evogcn/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "evogcn/errors.hpp"

namespace evogcn {

namespace {

struct RawEdge {
  long long source;
  long long target;
  double weight;
  double timestamp;
  bool has_label = false;
  int label = 0;
};

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == '\r') continue;
    return c == '#' || c == '%';
  }
  return true;
}

std::vector<RawEdge> parse_edges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list " + path);
  std::vector<RawEdge> edges;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream ss(line);
    RawEdge e{};
    if (!(ss >> e.source >> e.target >> e.weight >> e.timestamp)) {
      throw DataError("parse error at " + path + ":" + std::to_string(line_no) +
                      ": expected 'source target weight timestamp [label]'");
    }
    int label;
    if (ss >> label) {
      e.has_label = true;
      e.label = label;
    }
    std::string rest;
    if (ss >> rest) {
      throw DataError("parse error at " + path + ":" + std::to_string(line_no) +
                      ": trailing field '" + rest + "'");
    }
    edges.push_back(e);
  }
  if (edges.empty()) throw DataError("edge list " + path + " contains no edges");
  return edges;
}

Matrix load_feature_file(const std::string& path,
                         const std::unordered_map<long long, int>& id_map, int n) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path);
  Matrix features;
  std::string line;
  long long line_no = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream ss(line);
    long long id;
    if (!(ss >> id)) {
      throw DataError("parse error at " + path + ":" + std::to_string(line_no));
    }
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.empty()) {
      throw DataError("parse error at " + path + ":" + std::to_string(line_no) +
                      ": node has no feature values");
    }
    if (dim < 0) {
      dim = static_cast<int>(row.size());
      features = Matrix(n, dim);
    } else if (static_cast<int>(row.size()) != dim) {
      throw DataError("feature width changed at " + path + ":" + std::to_string(line_no));
    }
    auto it = id_map.find(id);
    if (it == id_map.end()) continue;  // feature rows for unseen nodes are ignored
    for (int j = 0; j < dim; ++j) features.at(it->second, j) = row[j];
  }
  if (dim < 0) throw DataError("feature file " + path + " contains no rows");
  return features;
}

}  // namespace

TemporalGraph ingest_edge_list(const IngestConfig& config, IngestStats* stats) {
  if (config.target_steps <= 0 && config.granularity_seconds <= 0) {
    throw ConfigError("ingest: set target_steps or granularity_seconds");
  }
  if (config.target_steps > 0 && config.granularity_seconds > 0) {
    throw ConfigError("ingest: target_steps and granularity_seconds are exclusive");
  }

  std::vector<RawEdge> raw = parse_edges(config.path);

  double t_min = raw.front().timestamp, t_max = raw.front().timestamp;
  for (const RawEdge& e : raw) {
    t_min = std::min(t_min, e.timestamp);
    t_max = std::max(t_max, e.timestamp);
  }
  if (config.limit_days > 0) {
    const double cutoff = t_min + static_cast<double>(config.limit_days) * 86400.0;
    std::erase_if(raw, [&](const RawEdge& e) { return e.timestamp >= cutoff; });
    if (raw.empty()) throw DataError("ingest: limit_days removed every edge");
    t_max = t_min;
    for (const RawEdge& e : raw) t_max = std::max(t_max, e.timestamp);
  }

  // densify node ids in ascending order of the original id
  std::vector<long long> ids;
  ids.reserve(raw.size() * 2);
  for (const RawEdge& e : raw) {
    ids.push_back(e.source);
    ids.push_back(e.target);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::unordered_map<long long, int> id_map;
  id_map.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) id_map[ids[i]] = static_cast<int>(i);
  const int n = static_cast<int>(ids.size());

  int steps;
  double width = 0.0;
  if (config.target_steps > 0) {
    steps = config.target_steps;
    width = (t_max - t_min) / static_cast<double>(steps);
  } else {
    width = config.granularity_seconds;
    steps = static_cast<int>(std::floor((t_max - t_min) / width)) + 1;
  }
  auto bucket_of = [&](double ts) {
    if (width <= 0.0) return 0;
    const int b = static_cast<int>(std::floor((ts - t_min) / width));
    return std::min(std::max(b, 0), steps - 1);
  };

  struct Accum {
    double weight = 0.0;
    bool has_label = false;
    int label = 0;
  };
  std::vector<std::map<std::pair<int, int>, Accum>> buckets(steps);
  long long aggregated = 0;
  for (const RawEdge& e : raw) {
    const int b = bucket_of(e.timestamp);
    const int u = id_map[e.source];
    const int v = id_map[e.target];
    auto [it, inserted] = buckets[b].try_emplace({u, v});
    if (!inserted) ++aggregated;
    it->second.weight += e.weight;
    if (e.has_label) {
      it->second.has_label = true;
      it->second.label = e.label;  // last parsed label wins within a bucket
    }
    if (!config.directed && u != v) {
      auto [rit, rinserted] = buckets[b].try_emplace({v, u});
      (void)rinserted;
      rit->second.weight += e.weight;
    }
  }

  Matrix shared_features;
  const bool has_feature_file = !config.feature_path.empty();
  if (has_feature_file) {
    shared_features = load_feature_file(config.feature_path, id_map, n);
  }

  TemporalGraph tg;
  tg.num_nodes = n;
  for (int b = 0; b < steps; ++b) {
    GraphSnapshot snap;
    snap.time_index = b;
    snap.adjacency = SparseAdjacency(n);
    std::vector<int> active;
    for (const auto& [edge, acc] : buckets[b]) {
      snap.adjacency.add_edge(edge.first, edge.second, acc.weight);
      if (acc.has_label) snap.edge_labels[edge] = acc.label;
      active.push_back(edge.first);
      active.push_back(edge.second);
    }
    snap.adjacency.finalize();
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    snap.active_nodes = std::move(active);
    snap.features = has_feature_file ? shared_features
                                     : degree_onehot_features(snap.adjacency,
                                                              config.feature_cap);
    tg.snapshots.push_back(std::move(snap));
  }

  if (!config.node_label_path.empty()) {
    std::ifstream in(config.node_label_path);
    if (!in) throw DataError("cannot open node label file " + config.node_label_path);
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (is_comment_or_blank(line)) continue;
      std::istringstream ss(line);
      long long id;
      int step, cls;
      if (!(ss >> id >> step >> cls)) {
        throw DataError("parse error at " + config.node_label_path + ":" +
                        std::to_string(line_no) + ": expected 'node_id time_step class'");
      }
      auto it = id_map.find(id);
      if (it == id_map.end()) continue;  // labels for unseen nodes are ignored
      if (step < 0 || step >= steps) {
        throw DataError("node label at " + config.node_label_path + ":" +
                        std::to_string(line_no) + " references step " +
                        std::to_string(step) + " outside [0," + std::to_string(steps) + ")");
      }
      GraphSnapshot& snap = tg.snapshots[step];
      snap.node_labels[it->second] = cls;
      // a labeled node counts as present at that step
      auto pos = std::lower_bound(snap.active_nodes.begin(), snap.active_nodes.end(),
                                  it->second);
      if (pos == snap.active_nodes.end() || *pos != it->second) {
        snap.active_nodes.insert(pos, it->second);
      }
    }
  }

  for (const GraphSnapshot& snap : tg.snapshots) snap.validate();

  if (stats) {
    stats->lines = static_cast<long long>(raw.size());
    stats->aggregated = aggregated;
    stats->nodes = n;
    stats->steps = steps;
  }
  return tg;
}

SplitRanges temporal_split(const TemporalGraph& tg, int train, int val, int test) {
  if (train < 0 || val < 0 || test < 0) {
    throw ConfigError("split counts must be non-negative");
  }
  if (train + val + test > tg.num_steps()) {
    throw ConfigError("split " + std::to_string(train) + "/" + std::to_string(val) + "/" +
                      std::to_string(test) + " needs more steps than the " +
                      std::to_string(tg.num_steps()) + " available");
  }
  SplitRanges r;
  r.train_begin = 0;
  r.train_end = train;
  r.val_begin = train;
  r.val_end = train + val;
  r.test_begin = train + val;
  r.test_end = train + val + test;
  return r;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

constexpr char kCacheMagic[8] = {'E', 'V', 'G', 'C', 'A', 'C', 'H', 'E'};

}  // namespace

void save_snapshot_cache(const TemporalGraph& tg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write snapshot cache " + path);
  out.write(kCacheMagic, sizeof(kCacheMagic));
  write_pod<std::uint32_t>(out, 1);  // version
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tg.num_nodes));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tg.num_steps()));

  long long total_edges = 0;
  for (const GraphSnapshot& snap : tg.snapshots) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(snap.time_index));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(snap.adjacency.nnz()));
    total_edges += snap.adjacency.nnz();
    for (int r = 0; r < snap.adjacency.n(); ++r) {
      for (int k = snap.adjacency.row_ptr()[r]; k < snap.adjacency.row_ptr()[r + 1]; ++k) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(r));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(snap.adjacency.col_index()[k]));
        write_pod<double>(out, snap.adjacency.weights()[k]);
      }
    }
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(snap.features.rows()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(snap.features.cols()));
    out.write(reinterpret_cast<const char*>(snap.features.data()),
              static_cast<std::streamsize>(snap.features.size() * sizeof(double)));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(snap.active_nodes.size()));
    for (int u : snap.active_nodes) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(u));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(snap.edge_labels.size()));
    for (const auto& [edge, label] : snap.edge_labels) {
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(edge.first));
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(edge.second));
      write_pod<std::int32_t>(out, label);
    }
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(snap.node_labels.size()));
    for (const auto& [node, label] : snap.node_labels) {
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(node));
      write_pod<std::int32_t>(out, label);
    }
  }
  if (!out) throw DataError("short write to snapshot cache " + path);

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["num_nodes"] = tg.num_nodes;
  manifest["steps"] = tg.num_steps();
  manifest["total_edges"] = total_edges;
  std::ofstream mf(path + ".json");
  if (!mf) throw DataError("cannot write cache manifest " + path + ".json");
  mf << manifest.dump(2) << '\n';
}

TemporalGraph load_snapshot_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read snapshot cache " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kCacheMagic)) {
    throw DataError(path + " is not a snapshot cache");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != 1) throw DataError("unsupported cache version " + std::to_string(version));
  const int n = static_cast<int>(read_pod<std::uint32_t>(in));
  const int steps = static_cast<int>(read_pod<std::uint32_t>(in));

  TemporalGraph tg;
  tg.num_nodes = n;
  for (int s = 0; s < steps; ++s) {
    GraphSnapshot snap;
    snap.time_index = static_cast<int>(read_pod<std::uint32_t>(in));
    const auto nnz = read_pod<std::uint64_t>(in);
    snap.adjacency = SparseAdjacency(n);
    for (std::uint64_t k = 0; k < nnz; ++k) {
      const auto u = read_pod<std::uint32_t>(in);
      const auto v = read_pod<std::uint32_t>(in);
      const double w = read_pod<double>(in);
      snap.adjacency.add_edge(static_cast<int>(u), static_cast<int>(v), w);
    }
    snap.adjacency.finalize();
    const int rows = static_cast<int>(read_pod<std::uint32_t>(in));
    const int cols = static_cast<int>(read_pod<std::uint32_t>(in));
    snap.features = Matrix(rows, cols);
    in.read(reinterpret_cast<char*>(snap.features.data()),
            static_cast<std::streamsize>(snap.features.size() * sizeof(double)));
    const auto active = read_pod<std::uint64_t>(in);
    snap.active_nodes.reserve(active);
    for (std::uint64_t k = 0; k < active; ++k) {
      snap.active_nodes.push_back(static_cast<int>(read_pod<std::uint32_t>(in)));
    }
    const auto edge_labels = read_pod<std::uint64_t>(in);
    for (std::uint64_t k = 0; k < edge_labels; ++k) {
      const auto u = read_pod<std::uint32_t>(in);
      const auto v = read_pod<std::uint32_t>(in);
      const auto label = read_pod<std::int32_t>(in);
      snap.edge_labels[{static_cast<int>(u), static_cast<int>(v)}] = label;
    }
    const auto node_labels = read_pod<std::uint64_t>(in);
    for (std::uint64_t k = 0; k < node_labels; ++k) {
      const auto u = read_pod<std::uint32_t>(in);
      const auto label = read_pod<std::int32_t>(in);
      snap.node_labels[static_cast<int>(u)] = label;
    }
    if (!in) throw DataError("truncated snapshot cache " + path);
    tg.snapshots.push_back(std::move(snap));
  }
  return tg;
}

}  // namespace evogcn
