#include "evogcn/graph.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "evogcn/errors.hpp"

namespace evogcn {

bool GraphSnapshot::is_active(int u) const {
  return std::binary_search(active_nodes.begin(), active_nodes.end(), u);
}

std::vector<std::pair<int, int>> GraphSnapshot::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(adjacency.nnz());
  for (int r = 0; r < adjacency.n(); ++r) {
    for (int k = adjacency.row_ptr()[r]; k < adjacency.row_ptr()[r + 1]; ++k) {
      out.emplace_back(r, adjacency.col_index()[k]);
    }
  }
  return out;
}

const SparseAdjacency& GraphSnapshot::normalized() const {
  if (!normalized_) {
    normalized_ = std::make_shared<const SparseAdjacency>(
        normalize_adjacency(symmetrize_max(adjacency)));
  }
  return *normalized_;
}

void GraphSnapshot::validate() const {
  if (features.rows() != adjacency.n()) {
    throw DataError("snapshot " + std::to_string(time_index) + ": feature rows " +
                    std::to_string(features.rows()) + " != node count " +
                    std::to_string(adjacency.n()));
  }
  for (const auto& [edge, label] : edge_labels) {
    (void)label;
    if (!adjacency.has_edge(edge.first, edge.second)) {
      throw DataError("snapshot " + std::to_string(time_index) + ": labeled edge (" +
                      std::to_string(edge.first) + "," + std::to_string(edge.second) +
                      ") is not in the adjacency");
    }
  }
  for (const auto& [node, label] : node_labels) {
    (void)label;
    if (!is_active(node)) {
      throw DataError("snapshot " + std::to_string(time_index) + ": labeled node " +
                      std::to_string(node) + " is not active");
    }
  }
}

Matrix degree_onehot_features(const SparseAdjacency& raw, int cap) {
  if (cap < 1) throw ArgumentError("degree cap must be >= 1");
  const int n = raw.n();
  std::vector<std::set<int>> neighbors(n);
  for (int r = 0; r < n; ++r) {
    for (int k = raw.row_ptr()[r]; k < raw.row_ptr()[r + 1]; ++k) {
      const int c = raw.col_index()[k];
      if (c == r) continue;
      neighbors[r].insert(c);
      neighbors[c].insert(r);
    }
  }
  Matrix features(n, cap + 1);
  for (int u = 0; u < n; ++u) {
    const int d = std::min(static_cast<int>(neighbors[u].size()), cap);
    features.at(u, d) = 1.0;
  }
  return features;
}

Var gconv(Tape& tape, const SparseAdjacency& a_hat, Var h, Var w, Activation act) {
  return tape.activation(tape.matmul(tape.spmm(a_hat, h), w), act);
}

}  // namespace evogcn
