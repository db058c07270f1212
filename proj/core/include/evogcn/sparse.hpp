#pragma once

#include <cstdint>
#include <vector>

#include "evogcn/matrix.hpp"

namespace evogcn {

// Square sparse weighted adjacency in compressed-row form. Built by add_edge
// and frozen by finalize(); duplicate (row, col) pairs aggregate by weight sum.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;
  explicit SparseAdjacency(int n);

  int n() const { return n_; }
  int nnz() const { return static_cast<int>(cols_.size()); }
  bool finalized() const { return finalized_; }

  void add_edge(int row, int col, double weight);
  void finalize();

  // CSR access; valid only after finalize().
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_index() const { return cols_; }
  const std::vector<double>& weights() const { return vals_; }

  double weight(int row, int col) const;  // 0 if absent
  bool has_edge(int row, int col) const { return weight(row, col) != 0.0; }
  int row_nnz(int row) const { return row_ptr_[row + 1] - row_ptr_[row]; }

  Matrix to_dense() const;

 private:
  struct Entry {
    int row;
    int col;
    double weight;
  };

  void require_finalized(const char* op) const;

  int n_ = 0;
  bool finalized_ = false;
  std::vector<Entry> pending_;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

// D^{-1/2} (A + I) D^{-1/2} with unit self-loops; rejects negative weights.
SparseAdjacency normalize_adjacency(const SparseAdjacency& a);

// max(A_ij, A_ji) for every pair; used before normalization on directed input.
SparseAdjacency symmetrize_max(const SparseAdjacency& a);

// Plain (non-differentiated) product A * h.
Matrix spmm_value(const SparseAdjacency& a, const Matrix& h);

}  // namespace evogcn
