#pragma once

#include <random>
#include <utility>
#include <vector>

#include "evogcn/autodiff.hpp"
#include "evogcn/graph.hpp"

namespace evogcn {

// Single affine layer applied to node embeddings (width d_emb) or to
// concatenated pair embeddings (width 2*d_emb). Logits are produced in
// class-major orientation (classes x samples) so the bias is a plain column.
struct MlpHead {
  Parameter weight;  // classes x input_width
  Parameter bias;    // classes x 1
  MlpHead(const std::string& prefix, int input_width, int classes, std::mt19937_64& rng);

  int input_width() const { return weight.value.cols(); }
  int classes() const { return weight.value.rows(); }
  std::vector<Parameter*> params() { return {&weight, &bias}; }
};

struct EdgeSample {
  int source = 0;
  int target = 0;
  int time_index = 0;
  int label = 0;  // 1/0 for link existence, or a class id
};

// Logits for a batch of node pairs: affine([h_u; h_v]) -> classes x pairs.
Var edge_pair_logits(Tape& tape, Var embeddings,
                     const std::vector<std::pair<int, int>>& pairs, MlpHead& head);

// Logits for a batch of nodes: affine(h_u) -> classes x nodes.
Var node_logits(Tape& tape, Var embeddings, const std::vector<int>& nodes, MlpHead& head);

// sigma(affine([h_u; h_v])) for a single-logit head; plain value math used
// for scoring outside the tape.
double link_score(const Matrix& embeddings, int u, int v, const MlpHead& head);
std::vector<double> link_scores(const Matrix& embeddings,
                                const std::vector<std::pair<int, int>>& pairs,
                                const MlpHead& head);

// For each positive (u,v) in `positives` draws `ratio` corrupted pairs
// (u, v') with v' uniform over the snapshot's active nodes, rejecting
// existing edges and self-pairs. Deterministic under a fixed generator.
std::vector<EdgeSample> sample_negatives(const GraphSnapshot& snapshot,
                                         const std::vector<std::pair<int, int>>& positives,
                                         int ratio, std::mt19937_64& rng);

// Mean binary cross-entropy of single-logit scores; labels in {0,1}.
Var link_loss(Tape& tape, Var logits, const std::vector<int>& labels);
// Mean softmax cross-entropy over class-major logits.
Var edge_class_loss(Tape& tape, Var logits, const std::vector<int>& labels);
// As edge_class_loss with optional per-class weights (empty = unweighted);
// each sample's loss is scaled by its class weight and divided by the count.
Var node_class_loss(Tape& tape, Var logits, const std::vector<int>& labels,
                    const std::vector<double>& class_weights);

}  // namespace evogcn
