#pragma once

#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "evogcn/autodiff.hpp"
#include "evogcn/matrix.hpp"
#include "evogcn/sparse.hpp"

namespace evogcn {

// One time step: raw (directed, aggregated) adjacency, node features, the
// active-node set and optional labels. Immutable once built; the normalized
// adjacency used by graph convolutions is computed on demand and cached.
struct GraphSnapshot {
  int time_index = 0;
  SparseAdjacency adjacency;  // raw edges; link/edge labels refer to these
  Matrix features;            // n x d
  std::vector<int> active_nodes;                // sorted unique ids
  std::map<std::pair<int, int>, int> edge_labels;
  std::map<int, int> node_labels;

  int n() const { return adjacency.n(); }
  bool is_active(int u) const;
  std::vector<std::pair<int, int>> edges() const;  // raw directed pairs

  // symmetrize(max of directions) then D^{-1/2}(A+I)D^{-1/2}; cached.
  const SparseAdjacency& normalized() const;

  // Checks the documented invariants (feature rows, labels reference
  // existing edges / active nodes); throws DataError on violation.
  void validate() const;

 private:
  mutable std::shared_ptr<const SparseAdjacency> normalized_;
};

struct TemporalGraph {
  int num_nodes = 0;
  std::vector<GraphSnapshot> snapshots;

  int num_steps() const { return static_cast<int>(snapshots.size()); }
};

// Contiguous step ranges [0,train) [train,train+val) [train+val,train+val+test).
struct SplitRanges {
  int train_begin = 0, train_end = 0;
  int val_begin = 0, val_end = 0;
  int test_begin = 0, test_end = 0;
};

// Row u is the indicator of min(degree(u), cap); degree counts distinct
// neighbors in either direction, ignoring weights and self-loops.
Matrix degree_onehot_features(const SparseAdjacency& raw, int cap);

// act(a_hat * h * w): one graph convolution on the tape.
Var gconv(Tape& tape, const SparseAdjacency& a_hat, Var h, Var w, Activation act);

}  // namespace evogcn
