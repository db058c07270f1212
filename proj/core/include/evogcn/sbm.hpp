#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evogcn/graph.hpp"

namespace evogcn {

// Dynamic stochastic block model: communities are sampled once, then each
// step migrates a fixed number of nodes to another community and re-samples
// every edge under the current assignments.
struct SbmConfig {
  int nodes = 100;
  int communities = 2;
  double intra = 0.25;       // edge probability inside a community
  double inter = 0.05;       // edge probability across communities
  int migrate_per_step = 10;
  int steps = 10;
  std::uint64_t seed = 1;
  int feature_cap = 100;     // degree one-hot cap for snapshot features

  void validate() const;
};

TemporalGraph generate_sbm(const SbmConfig& config,
                           std::vector<std::vector<int>>* assignments_out = nullptr);

// Writes <dir>/edges.txt (source target weight timestamp) and
// <dir>/manifest.json describing the generated dataset.
void write_sbm_dataset(const SbmConfig& config, const std::string& dir);

}  // namespace evogcn
