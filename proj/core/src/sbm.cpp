#include "evogcn/sbm.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "evogcn/errors.hpp"

namespace evogcn {

void SbmConfig::validate() const {
  if (nodes < 2) throw ConfigError("sbm: need at least 2 nodes");
  if (communities < 1 || communities > nodes) {
    throw ConfigError("sbm: community count must be in [1, nodes]");
  }
  if (intra < 0.0 || intra > 1.0 || inter < 0.0 || inter > 1.0) {
    throw ConfigError("sbm: edge probabilities must lie in [0, 1]");
  }
  if (migrate_per_step < 0 || migrate_per_step >= nodes) {
    throw ConfigError("sbm: migration count must lie in [0, nodes)");
  }
  if (steps < 1) throw ConfigError("sbm: need at least one step");
  if (feature_cap < 1) throw ConfigError("sbm: feature cap must be >= 1");
}

TemporalGraph generate_sbm(const SbmConfig& config,
                           std::vector<std::vector<int>>* assignments_out) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> comm(0, config.communities - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<int> assignment(config.nodes);
  for (int& c : assignment) c = comm(rng);

  if (assignments_out) assignments_out->clear();

  TemporalGraph tg;
  tg.num_nodes = config.nodes;
  for (int t = 0; t < config.steps; ++t) {
    if (t > 0 && config.migrate_per_step > 0) {
      // migrate distinct nodes, each to a uniformly chosen other community
      std::vector<int> ids(config.nodes);
      std::iota(ids.begin(), ids.end(), 0);
      for (int m = 0; m < config.migrate_per_step; ++m) {
        std::uniform_int_distribution<int> pick(m, config.nodes - 1);
        std::swap(ids[m], ids[pick(rng)]);
        const int node = ids[m];
        if (config.communities > 1) {
          std::uniform_int_distribution<int> other(0, config.communities - 2);
          int c = other(rng);
          if (c >= assignment[node]) ++c;
          assignment[node] = c;
        }
      }
    }
    if (assignments_out) assignments_out->push_back(assignment);

    GraphSnapshot snap;
    snap.time_index = t;
    snap.adjacency = SparseAdjacency(config.nodes);
    for (int i = 0; i < config.nodes; ++i) {
      for (int j = i + 1; j < config.nodes; ++j) {
        const double p = assignment[i] == assignment[j] ? config.intra : config.inter;
        if (coin(rng) < p) {
          snap.adjacency.add_edge(i, j, 1.0);
          snap.adjacency.add_edge(j, i, 1.0);
        }
      }
    }
    snap.adjacency.finalize();
    snap.features = degree_onehot_features(snap.adjacency, config.feature_cap);
    snap.active_nodes.resize(config.nodes);
    std::iota(snap.active_nodes.begin(), snap.active_nodes.end(), 0);
    tg.snapshots.push_back(std::move(snap));
  }
  return tg;
}

void write_sbm_dataset(const SbmConfig& config, const std::string& dir) {
  const TemporalGraph tg = generate_sbm(config);

  std::filesystem::create_directories(dir);
  const std::string edges_path = dir + "/edges.txt";
  std::ofstream edges(edges_path);
  if (!edges) throw DataError("cannot write " + edges_path);
  edges << "# source target weight timestamp\n";
  long long edge_lines = 0;
  for (const GraphSnapshot& snap : tg.snapshots) {
    for (const auto& [u, v] : snap.edges()) {
      if (u < v) {  // undirected: store each pair once
        edges << u << ' ' << v << " 1 " << snap.time_index << '\n';
        ++edge_lines;
      }
    }
  }
  if (!edges) throw DataError("short write to " + edges_path);
  edges.close();

  nlohmann::json manifest;
  manifest["dataset"] = "sbm";
  manifest["nodes"] = config.nodes;
  manifest["communities"] = config.communities;
  manifest["intra"] = config.intra;
  manifest["inter"] = config.inter;
  manifest["migrate_per_step"] = config.migrate_per_step;
  manifest["steps"] = tg.num_steps();
  manifest["seed"] = config.seed;
  manifest["edge_lines"] = edge_lines;
  manifest["directed"] = false;

  const std::string manifest_path = dir + "/manifest.json";
  std::ofstream mf(manifest_path);
  if (!mf) throw DataError("cannot write " + manifest_path);
  mf << manifest.dump(2) << '\n';
}

}  // namespace evogcn
