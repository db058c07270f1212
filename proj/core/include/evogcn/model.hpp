#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "evogcn/autodiff.hpp"
#include "evogcn/cells.hpp"
#include "evogcn/graph.hpp"

namespace evogcn {

enum class Variant { h, o, static_gcn, gcn_gru };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct LayerSpec {
  int d_in = 0;
  int d_out = 0;
  Activation act = Activation::relu;
};

struct ModelConfig {
  Variant variant = Variant::h;
  int feature_dim = 0;
  int embedding = 64;  // shared by every convolution layer
  int num_layers = 2;
};

struct EgcuHResult {
  Var h_next;
  Var weight;
};

struct EgcuOResult {
  Var h_next;
  Var weight;
  Var cell;
};

// One evolving graph convolution: evolve the weights from the previous step,
// then convolve. The -H unit feeds summarized node embeddings to a GRU whose
// hidden state is the weight matrix; the -O unit runs an LSTM on the weights
// alone and never reads the embeddings.
EgcuHResult egcu_h(Tape& tape, const SparseAdjacency& a_hat, Var h, Var w_prev,
                   MatrixGruParams& gru, SummarizeParams& summ, Activation act);
EgcuOResult egcu_o(Tape& tape, const SparseAdjacency& a_hat, Var h, Var w_prev,
                   Var cell_prev, MatrixLstmParams& lstm, Activation act);

struct WindowForward {
  std::vector<Var> embeddings;            // per step: n x d_emb top-layer output
  std::vector<std::vector<Var>> weights;  // per step, per layer: the weights used
};

// The stacked model: EvolveGCN (-H or -O) or one of the baselines. Trainable
// parameters never include per-time-step weight matrices, so the model size
// is independent of the sequence length.
class EvolveModel {
 public:
  EvolveModel(const ModelConfig& cfg, std::mt19937_64& rng);

  const ModelConfig& config() const { return cfg_; }
  Variant variant() const { return cfg_.variant; }
  const std::vector<LayerSpec>& layers() const { return specs_; }

  std::vector<Parameter*> trainable();
  void zero_grad();

  // Runs the layer/time lattice over an ordered window of snapshots. Weight
  // evolution (and the LSTM cell context) restarts from the trained initial
  // state at the beginning of every window.
  WindowForward forward_window(Tape& tape,
                               const std::vector<const GraphSnapshot*>& window);

 private:
  ModelConfig cfg_;
  std::vector<LayerSpec> specs_;
  std::vector<std::unique_ptr<Parameter>> w0_;
  std::vector<std::unique_ptr<MatrixGruParams>> grus_;
  std::vector<std::unique_ptr<SummarizeParams>> summaries_;
  std::vector<std::unique_ptr<MatrixLstmParams>> lstms_;
  std::unique_ptr<MatrixGruParams> node_gru_;  // gcn-gru baseline
};

// Window view helper: pointers to snapshots [begin, end) of a temporal graph.
std::vector<const GraphSnapshot*> window_view(const TemporalGraph& tg, int begin, int end);

// Flat binary checkpoint (64-bit little-endian values) plus a text manifest
// listing name, rows, cols and byte offset per matrix.
void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params);
void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

}  // namespace evogcn
