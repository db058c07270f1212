#include "evogcn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evogcn/errors.hpp"

namespace evogcn {

SparseAdjacency::SparseAdjacency(int n) : n_(n) {
  if (n < 0) throw ArgumentError("adjacency size must be non-negative");
}

void SparseAdjacency::add_edge(int row, int col, double weight) {
  if (finalized_) throw ArgumentError("add_edge after finalize");
  if (row < 0 || row >= n_ || col < 0 || col >= n_) {
    throw ArgumentError("edge (" + std::to_string(row) + "," + std::to_string(col) +
                        ") out of range for " + std::to_string(n_) + " nodes");
  }
  pending_.push_back({row, col, weight});
}

void SparseAdjacency::finalize() {
  if (finalized_) return;
  std::sort(pending_.begin(), pending_.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(n_ + 1, 0);
  cols_.clear();
  vals_.clear();
  std::size_t i = 0;
  for (int r = 0; r < n_; ++r) {
    while (i < pending_.size() && pending_[i].row == r) {
      double w = pending_[i].weight;
      int c = pending_[i].col;
      ++i;
      while (i < pending_.size() && pending_[i].row == r && pending_[i].col == c) {
        w += pending_[i].weight;
        ++i;
      }
      cols_.push_back(c);
      vals_.push_back(w);
    }
    row_ptr_[r + 1] = static_cast<int>(cols_.size());
  }
  pending_.clear();
  pending_.shrink_to_fit();
  finalized_ = true;
}

void SparseAdjacency::require_finalized(const char* op) const {
  if (!finalized_) throw ArgumentError(std::string(op) + " requires a finalized adjacency");
}

double SparseAdjacency::weight(int row, int col) const {
  require_finalized("weight");
  const int lo = row_ptr_[row], hi = row_ptr_[row + 1];
  auto it = std::lower_bound(cols_.begin() + lo, cols_.begin() + hi, col);
  if (it != cols_.begin() + hi && *it == col) {
    return vals_[static_cast<std::size_t>(it - cols_.begin())];
  }
  return 0.0;
}

Matrix SparseAdjacency::to_dense() const {
  require_finalized("to_dense");
  Matrix d(n_, n_);
  for (int r = 0; r < n_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      d.at(r, cols_[k]) = vals_[k];
    }
  }
  return d;
}

SparseAdjacency normalize_adjacency(const SparseAdjacency& a) {
  if (!a.finalized()) throw ArgumentError("normalize_adjacency requires a finalized adjacency");
  const int n = a.n();

  std::vector<double> degree(n, 1.0);  // self-loop weight 1
  for (int r = 0; r < n; ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      const double w = a.weights()[k];
      if (w < 0.0) {
        throw DataError("negative weight " + std::to_string(w) + " on edge (" +
                        std::to_string(r) + "," + std::to_string(a.col_index()[k]) +
                        ") cannot be normalized");
      }
      degree[r] += w;
    }
  }

  std::vector<double> inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  SparseAdjacency out(n);
  for (int r = 0; r < n; ++r) {
    bool has_diag = false;
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      const int c = a.col_index()[k];
      double w = a.weights()[k];
      if (c == r) {
        w += 1.0;
        has_diag = true;
      }
      out.add_edge(r, c, inv_sqrt[r] * w * inv_sqrt[c]);
    }
    if (!has_diag) out.add_edge(r, r, inv_sqrt[r] * inv_sqrt[r]);
  }
  out.finalize();
  return out;
}

SparseAdjacency symmetrize_max(const SparseAdjacency& a) {
  if (!a.finalized()) throw ArgumentError("symmetrize_max requires a finalized adjacency");
  const int n = a.n();
  SparseAdjacency out(n);
  for (int r = 0; r < n; ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      const int c = a.col_index()[k];
      const double w = a.weights()[k];
      const double rev = a.weight(c, r);
      const double m = std::max(w, rev);
      if (r == c) {
        out.add_edge(r, c, w);
      } else if (r < c) {
        out.add_edge(r, c, m);
        out.add_edge(c, r, m);
      } else if (rev == 0.0) {
        // (c, r) absent, so this pair was not emitted while scanning row c
        out.add_edge(r, c, m);
        out.add_edge(c, r, m);
      }
    }
  }
  out.finalize();
  return out;
}

Matrix spmm_value(const SparseAdjacency& a, const Matrix& h) {
  if (!a.finalized()) throw ArgumentError("spmm requires a finalized adjacency");
  if (a.n() != h.rows()) {
    throw DimensionError("spmm shape mismatch: adjacency " + std::to_string(a.n()) +
                         "x" + std::to_string(a.n()) + " vs dense " + h.shape_str());
  }
  Matrix out(a.n(), h.cols());
  const int d = h.cols();
  for (int r = 0; r < a.n(); ++r) {
    double* orow = out.row(r);
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      const double w = a.weights()[k];
      const double* hrow = h.row(a.col_index()[k]);
      for (int j = 0; j < d; ++j) orow[j] += w * hrow[j];
    }
  }
  return out;
}

}  // namespace evogcn
