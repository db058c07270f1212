#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace evogcn {

// Dense row-major matrix of 64-bit reals. The single value type that flows
// through the differentiation tape.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-initialized

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
  static Matrix ones(int rows, int cols);
  static Matrix filled(int rows, int cols, double value);
  static Matrix identity(int n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix uniform(int rows, int cols, double lo, double hi, std::mt19937_64& rng);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  double scalar() const;  // value of a 1x1 matrix

  double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double* row(int r) { return values_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return values_.data() + static_cast<std::size_t>(r) * cols_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;  // e.g. "3x4"

  void set_zero();
  void add_in_place(const Matrix& other);
  void scale_in_place(double factor);
  double sum() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// c += a * b; shapes must already agree. Zero entries of `a` are skipped, so
// products with one-hot or convolved-sparse left factors cost O(nnz(a) * b.cols).
void matmul_acc(Matrix& c, const Matrix& a, const Matrix& b);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace evogcn
