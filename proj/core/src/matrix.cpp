#include "evogcn/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "evogcn/errors.hpp"

namespace evogcn {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw ArgumentError("matrix dimensions must be non-negative, got " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  values_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix Matrix::ones(int rows, int cols) { return filled(rows, cols, 1.0); }

Matrix Matrix::filled(int rows, int cols, double value) {
  Matrix m(rows, cols);
  for (auto& v : m.values_) v = value;
  return m;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) {
      throw ArgumentError("ragged initializer: row " + std::to_string(i) +
                          " has " + std::to_string(row.size()) + " entries, expected " +
                          std::to_string(c));
    }
    int j = 0;
    for (double v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::uniform(int rows, int cols, double lo, double hi, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : m.values_) v = dist(rng);
  return m;
}

double Matrix::scalar() const {
  if (!is_scalar()) {
    throw DimensionError("expected a 1x1 matrix, got " + shape_str());
  }
  return values_[0];
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::set_zero() {
  for (auto& v : values_) v = 0.0;
}

void Matrix::add_in_place(const Matrix& other) {
  if (!same_shape(other)) {
    throw DimensionError("cannot add " + other.shape_str() + " into " + shape_str());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

void Matrix::scale_in_place(double factor) {
  for (auto& v : values_) v *= factor;
}

double Matrix::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void matmul_acc(Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + a.shape_str() + " * " + b.shape_str());
  }
  if (c.rows() != a.rows() || c.cols() != b.cols()) {
    throw DimensionError("matmul output shape mismatch: got " + c.shape_str() +
                         ", expected " + std::to_string(a.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int p = 0; p < k; ++p) {
      const double apv = arow[p];
      if (apv == 0.0) continue;
      const double* brow = b.row(p);
      for (int j = 0; j < n; ++j) crow[j] += apv * brow[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_acc(c, a, b);
  return c;
}

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) t.at(j, i) = m.at(i, j);
  }
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("max_abs_diff shape mismatch: " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      m = std::max(m, std::abs(a.at(i, j) - b.at(i, j)));
    }
  }
  return m;
}

}  // namespace evogcn
