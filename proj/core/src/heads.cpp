#include "evogcn/heads.hpp"

#include <cmath>
#include <string>

#include "evogcn/errors.hpp"

namespace evogcn {

namespace {

Matrix onehot_rows(const std::vector<int>& labels, int classes) {
  Matrix y(static_cast<int>(labels.size()), classes);
  for (int i = 0; i < y.rows(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= classes) {
      throw ArgumentError("label " + std::to_string(c) + " out of range for " +
                          std::to_string(classes) + " classes");
    }
    y.at(i, c) = 1.0;
  }
  return y;
}

}  // namespace

MlpHead::MlpHead(const std::string& prefix, int input_width, int classes,
                 std::mt19937_64& rng)
    : weight(prefix + ".weight",
             Matrix::uniform(classes, input_width,
                             -1.0 / std::sqrt(static_cast<double>(input_width)),
                             1.0 / std::sqrt(static_cast<double>(input_width)), rng)),
      bias(prefix + ".bias", Matrix(classes, 1)) {
  if (input_width < 1 || classes < 1) {
    throw ConfigError("head dimensions must be positive");
  }
}

Var edge_pair_logits(Tape& tape, Var embeddings,
                     const std::vector<std::pair<int, int>>& pairs, MlpHead& head) {
  if (pairs.empty()) throw ArgumentError("empty pair batch");
  const int d = tape.value(embeddings).cols();
  if (head.input_width() != 2 * d) {
    throw DimensionError("head input width " + std::to_string(head.input_width()) +
                         " does not match concatenated embedding width " +
                         std::to_string(2 * d));
  }
  std::vector<int> us, vs;
  us.reserve(pairs.size());
  vs.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    us.push_back(u);
    vs.push_back(v);
  }
  Var rows = tape.concat_cols(tape.gather_rows(embeddings, us),
                              tape.gather_rows(embeddings, vs));  // pairs x 2d
  return tape.add(tape.matmul(tape.param(head.weight), tape.transpose(rows)),
                  tape.param(head.bias));
}

Var node_logits(Tape& tape, Var embeddings, const std::vector<int>& nodes, MlpHead& head) {
  if (nodes.empty()) throw ArgumentError("empty node batch");
  const int d = tape.value(embeddings).cols();
  if (head.input_width() != d) {
    throw DimensionError("head input width " + std::to_string(head.input_width()) +
                         " does not match embedding width " + std::to_string(d));
  }
  Var rows = tape.gather_rows(embeddings, nodes);
  return tape.add(tape.matmul(tape.param(head.weight), tape.transpose(rows)),
                  tape.param(head.bias));
}

double link_score(const Matrix& embeddings, int u, int v, const MlpHead& head) {
  const int d = embeddings.cols();
  if (head.classes() != 1 || head.input_width() != 2 * d) {
    throw DimensionError("link_score expects a 1x" + std::to_string(2 * d) + " head, got " +
                         head.weight.value.shape_str());
  }
  double z = head.bias.value.at(0, 0);
  for (int j = 0; j < d; ++j) {
    z += head.weight.value.at(0, j) * embeddings.at(u, j);
    z += head.weight.value.at(0, d + j) * embeddings.at(v, j);
  }
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> link_scores(const Matrix& embeddings,
                                const std::vector<std::pair<int, int>>& pairs,
                                const MlpHead& head) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [u, v] : pairs) out.push_back(link_score(embeddings, u, v, head));
  return out;
}

std::vector<EdgeSample> sample_negatives(const GraphSnapshot& snapshot,
                                         const std::vector<std::pair<int, int>>& positives,
                                         int ratio, std::mt19937_64& rng) {
  if (ratio < 1) throw ArgumentError("negative sampling ratio must be >= 1");
  if (snapshot.active_nodes.empty()) {
    throw SamplingError("snapshot " + std::to_string(snapshot.time_index) +
                        " has no active nodes to sample from");
  }
  std::uniform_int_distribution<std::size_t> pick(0, snapshot.active_nodes.size() - 1);
  constexpr int kAttemptsPerNegative = 100;

  std::vector<EdgeSample> out;
  out.reserve(positives.size() * static_cast<std::size_t>(ratio));
  for (const auto& [u, v] : positives) {
    (void)v;
    for (int k = 0; k < ratio; ++k) {
      bool found = false;
      for (int attempt = 0; attempt < kAttemptsPerNegative; ++attempt) {
        const int candidate = snapshot.active_nodes[pick(rng)];
        if (candidate == u) continue;
        if (snapshot.adjacency.has_edge(u, candidate)) continue;
        out.push_back({u, candidate, snapshot.time_index, 0});
        found = true;
        break;
      }
      if (!found) {
        throw SamplingError("could not sample a non-edge for source " + std::to_string(u) +
                            " at step " + std::to_string(snapshot.time_index) + " within " +
                            std::to_string(kAttemptsPerNegative) + " attempts");
      }
    }
  }
  return out;
}

Var link_loss(Tape& tape, Var logits, const std::vector<int>& labels) {
  const Matrix& lv = tape.value(logits);
  if (labels.empty()) throw ArgumentError("empty label batch");
  if (static_cast<int>(labels.size()) != lv.rows() * lv.cols()) {
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match logits " + lv.shape_str());
  }
  Matrix y(lv.rows(), lv.cols());
  for (int i = 0; i < lv.rows(); ++i) {
    for (int j = 0; j < lv.cols(); ++j) {
      y.at(i, j) = static_cast<double>(labels[static_cast<std::size_t>(i) * lv.cols() + j]);
    }
  }
  return tape.binary_cross_entropy_with_logits(logits, y);
}

Var edge_class_loss(Tape& tape, Var logits, const std::vector<int>& labels) {
  return node_class_loss(tape, logits, labels, {});
}

Var node_class_loss(Tape& tape, Var logits, const std::vector<int>& labels,
                    const std::vector<double>& class_weights) {
  if (labels.empty()) throw ArgumentError("empty label batch");
  const Matrix& lv = tape.value(logits);
  if (static_cast<int>(labels.size()) != lv.cols()) {
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match logits " + lv.shape_str());
  }
  const int classes = lv.rows();
  std::vector<double> row_weights;
  if (!class_weights.empty()) {
    if (static_cast<int>(class_weights.size()) != classes) {
      throw ArgumentError("class_weights size " + std::to_string(class_weights.size()) +
                          " does not match " + std::to_string(classes) + " classes");
    }
    row_weights.reserve(labels.size());
    for (int c : labels) {
      if (c < 0 || c >= classes) {
        throw ArgumentError("label " + std::to_string(c) + " out of range for " +
                            std::to_string(classes) + " classes");
      }
      row_weights.push_back(class_weights[c]);
    }
  }
  Var samples_major = tape.transpose(logits);  // samples x classes
  return tape.softmax_cross_entropy(samples_major, onehot_rows(labels, classes),
                                    row_weights);
}

}  // namespace evogcn
