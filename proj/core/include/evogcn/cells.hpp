#pragma once

#include <random>
#include <string>
#include <vector>

#include "evogcn/autodiff.hpp"

namespace evogcn {

// Gated recurrent unit over matrix-valued states: the same vector GRU applied
// to every column of (x, h_prev). All blocks are square of size d_in; biases
// are column vectors broadcast across columns.
struct MatrixGruParams {
  Parameter w_z, w_r, w_h;
  Parameter u_z, u_r, u_h;
  Parameter b_z, b_r, b_h;

  MatrixGruParams(const std::string& prefix, int d_in, std::mt19937_64& rng);
  int dim() const { return w_z.value.rows(); }
  std::vector<Parameter*> params();
};

// LSTM over matrix-valued inputs/outputs. Both the input path (w_*) and the
// recurrent path (u_*) receive the previous output; the cell context has the
// shape of the evolved weight matrix and is carried by the caller.
struct MatrixLstmParams {
  Parameter w_f, w_i, w_o, w_c;
  Parameter u_f, u_i, u_o, u_c;
  Parameter b_f, b_i, b_o, b_c;

  MatrixLstmParams(const std::string& prefix, int d_in, std::mt19937_64& rng);
  int dim() const { return w_f.value.rows(); }
  std::vector<Parameter*> params();
};

// Row-scoring vector for top-k summarization; one per graph convolution layer.
struct SummarizeParams {
  Parameter p;  // d_in x 1

  SummarizeParams(const std::string& prefix, int d_in, std::mt19937_64& rng);
  std::vector<Parameter*> params() { return {&p}; }
};

// y = x p / ||p||; select the k rows with the largest weights (descending by
// weight, ties by ascending row index) and scale each by tanh of its weight.
// The index selection is treated as constant during backward.
Var summarize(Tape& tape, Var x, int k, SummarizeParams& params);

// Selection indices only (exposed for tests of the tie/invariance rules).
std::vector<int> summarize_top_indices(const Matrix& x, int k, const Matrix& p);

// x: d_in x k, h_prev: d_in x d_out with k == d_out. Column c of the output
// depends only on column c of the inputs.
Var matrix_gru(Tape& tape, Var x, Var h_prev, MatrixGruParams& params);

struct LstmOut {
  Var output;
  Var cell;
};

// w_prev doubles as input and recurrent state; cell_prev must match its shape.
LstmOut matrix_lstm(Tape& tape, Var w_prev, Var cell_prev, MatrixLstmParams& params);

}  // namespace evogcn
