#include "evogcn/cells.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evogcn/errors.hpp"

namespace evogcn {

namespace {

Matrix block_init(int rows, int cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  return Matrix::uniform(rows, cols, -bound, bound, rng);
}

}  // namespace

MatrixGruParams::MatrixGruParams(const std::string& prefix, int d_in, std::mt19937_64& rng)
    : w_z(prefix + ".w_z", block_init(d_in, d_in, rng)),
      w_r(prefix + ".w_r", block_init(d_in, d_in, rng)),
      w_h(prefix + ".w_h", block_init(d_in, d_in, rng)),
      u_z(prefix + ".u_z", block_init(d_in, d_in, rng)),
      u_r(prefix + ".u_r", block_init(d_in, d_in, rng)),
      u_h(prefix + ".u_h", block_init(d_in, d_in, rng)),
      b_z(prefix + ".b_z", Matrix(d_in, 1)),
      b_r(prefix + ".b_r", Matrix(d_in, 1)),
      b_h(prefix + ".b_h", Matrix(d_in, 1)) {}

std::vector<Parameter*> MatrixGruParams::params() {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

MatrixLstmParams::MatrixLstmParams(const std::string& prefix, int d_in, std::mt19937_64& rng)
    : w_f(prefix + ".w_f", block_init(d_in, d_in, rng)),
      w_i(prefix + ".w_i", block_init(d_in, d_in, rng)),
      w_o(prefix + ".w_o", block_init(d_in, d_in, rng)),
      w_c(prefix + ".w_c", block_init(d_in, d_in, rng)),
      u_f(prefix + ".u_f", block_init(d_in, d_in, rng)),
      u_i(prefix + ".u_i", block_init(d_in, d_in, rng)),
      u_o(prefix + ".u_o", block_init(d_in, d_in, rng)),
      u_c(prefix + ".u_c", block_init(d_in, d_in, rng)),
      b_f(prefix + ".b_f", Matrix::ones(d_in, 1)),  // forget gate starts open
      b_i(prefix + ".b_i", Matrix(d_in, 1)),
      b_o(prefix + ".b_o", Matrix(d_in, 1)),
      b_c(prefix + ".b_c", Matrix(d_in, 1)) {}

std::vector<Parameter*> MatrixLstmParams::params() {
  return {&w_f, &w_i, &w_o, &w_c, &u_f, &u_i, &u_o, &u_c, &b_f, &b_i, &b_o, &b_c};
}

SummarizeParams::SummarizeParams(const std::string& prefix, int d_in, std::mt19937_64& rng)
    : p(prefix + ".p", block_init(d_in, 1, rng)) {}

std::vector<int> summarize_top_indices(const Matrix& x, int k, const Matrix& p) {
  if (k < 1 || k > x.rows()) {
    throw ArgumentError("summarize k=" + std::to_string(k) + " out of range for " +
                        std::to_string(x.rows()) + " rows");
  }
  double norm_sq = 0.0;
  for (int i = 0; i < p.rows(); ++i) norm_sq += p.at(i, 0) * p.at(i, 0);
  if (norm_sq <= 0.0) throw NumericError("summarize parameter vector has zero norm");
  const double inv_norm = 1.0 / std::sqrt(norm_sq);

  std::vector<double> y(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < x.cols(); ++j) dot += x.at(i, j) * p.at(j, 0);
    y[i] = dot * inv_norm;
  }
  std::vector<int> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return y[a] != y[b] ? y[a] > y[b] : a < b; });
  order.resize(k);
  return order;
}

Var summarize(Tape& tape, Var x, int k, SummarizeParams& params) {
  const Matrix& xv = tape.value(x);
  if (params.p.value.rows() != xv.cols()) {
    throw DimensionError("summarize parameter vector " + params.p.value.shape_str() +
                         " does not match input " + xv.shape_str());
  }
  const std::vector<int> picked = summarize_top_indices(xv, k, params.p.value);

  Var p = tape.param(params.p);
  Var norm = tape.epow(tape.reduce(tape.hadamard(p, p), Reduce::sum), 0.5);
  Var p_hat = tape.scale_by(p, tape.epow(norm, -1.0));
  Var weights = tape.matmul(x, p_hat);  // n x 1

  Var rows = tape.gather_rows(x, picked);
  Var gains = tape.activation(tape.gather_rows(weights, picked), Activation::tanh);
  return tape.hadamard(rows, gains);  // column vector broadcast scales each row
}

Var matrix_gru(Tape& tape, Var x, Var h_prev, MatrixGruParams& params) {
  const Matrix& xv = tape.value(x);
  const Matrix& hv = tape.value(h_prev);
  if (xv.rows() != params.dim() || hv.rows() != params.dim()) {
    throw DimensionError("matrix_gru expects " + std::to_string(params.dim()) +
                         " rows, got x " + xv.shape_str() + " and h " + hv.shape_str());
  }
  if (xv.cols() != hv.cols()) {
    throw DimensionError("matrix_gru column mismatch: x " + xv.shape_str() + " vs h " +
                         hv.shape_str());
  }

  auto gate = [&](Parameter& w, Parameter& u, Parameter& b, Var in, Var rec, Activation act) {
    Var pre = tape.add(tape.add(tape.matmul(tape.param(w), in), tape.matmul(tape.param(u), rec)),
                       tape.param(b));
    return tape.activation(pre, act);
  };

  Var z = gate(params.w_z, params.u_z, params.b_z, x, h_prev, Activation::sigmoid);
  Var r = gate(params.w_r, params.u_r, params.b_r, x, h_prev, Activation::sigmoid);
  Var h_tilde = gate(params.w_h, params.u_h, params.b_h, x,
                     tape.hadamard(r, h_prev), Activation::tanh);

  Var ones = tape.leaf(Matrix::ones(tape.value(z).rows(), tape.value(z).cols()));
  Var keep = tape.hadamard(tape.sub(ones, z), h_prev);
  return tape.add(keep, tape.hadamard(z, h_tilde));
}

LstmOut matrix_lstm(Tape& tape, Var w_prev, Var cell_prev, MatrixLstmParams& params) {
  const Matrix& wv = tape.value(w_prev);
  const Matrix& cv = tape.value(cell_prev);
  if (wv.rows() != params.dim()) {
    throw DimensionError("matrix_lstm expects " + std::to_string(params.dim()) +
                         " rows, got " + wv.shape_str());
  }
  if (!wv.same_shape(cv)) {
    throw DimensionError("matrix_lstm cell context " + cv.shape_str() +
                         " does not match input " + wv.shape_str());
  }

  // input and recurrent paths both read w_prev
  auto gate = [&](Parameter& w, Parameter& u, Parameter& b, Activation act) {
    Var pre = tape.add(
        tape.add(tape.matmul(tape.param(w), w_prev), tape.matmul(tape.param(u), w_prev)),
        tape.param(b));
    return tape.activation(pre, act);
  };

  Var f = gate(params.w_f, params.u_f, params.b_f, Activation::sigmoid);
  Var i = gate(params.w_i, params.u_i, params.b_i, Activation::sigmoid);
  Var o = gate(params.w_o, params.u_o, params.b_o, Activation::sigmoid);
  Var c_tilde = gate(params.w_c, params.u_c, params.b_c, Activation::tanh);

  Var cell = tape.add(tape.hadamard(f, cell_prev), tape.hadamard(i, c_tilde));
  Var out = tape.hadamard(o, tape.activation(cell, Activation::tanh));
  return {out, cell};
}

}  // namespace evogcn
