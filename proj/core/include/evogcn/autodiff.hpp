#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "evogcn/matrix.hpp"
#include "evogcn/sparse.hpp"

namespace evogcn {

enum class Activation { identity, relu, sigmoid, tanh };
enum class Elementwise { add, subtract, hadamard };
enum class Reduce { sum, mean };

Activation activation_from_string(const std::string& s);

// A named trainable matrix. Gradients accumulate across backward passes
// until zero_grad(); tapes are rebuilt per forward pass, parameters persist.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string name_, Matrix value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.set_zero(); }
};

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape over dense matrices. One tape belongs to
// one logical worker; record a forward pass, call backward once (or more:
// leaf gradients accumulate), then clear() and start the next pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void clear();
  int size() const { return static_cast<int>(nodes_.size()); }

  Var leaf(Matrix value, bool requires_grad = false);
  Var param(Parameter& p);

  Var matmul(Var a, Var b);
  // b may be a column vector with matching rows: it broadcasts across
  // columns (the bias convention); its gradient sums over the broadcast axis.
  Var elementwise(Var a, Var b, Elementwise kind);
  Var add(Var a, Var b) { return elementwise(a, b, Elementwise::add); }
  Var sub(Var a, Var b) { return elementwise(a, b, Elementwise::subtract); }
  Var hadamard(Var a, Var b) { return elementwise(a, b, Elementwise::hadamard); }
  Var activation(Var a, Activation kind);
  Var scale(Var a, double factor);
  Var scale_by(Var a, Var s);          // s is 1x1
  Var epow(Var a, double exponent);    // entrywise power
  Var reduce(Var a, Reduce kind);
  Var concat_cols(Var a, Var b);
  Var transpose(Var a);
  Var gather_rows(Var a, std::vector<int> index);
  // Adjacency is data, not a parameter: gradient flows into h only.
  Var spmm(const SparseAdjacency& a, Var h);
  // Mean over rows of -sum(label * log softmax(logit)); optional per-row
  // weights scale each row's contribution (still divided by the row count).
  Var softmax_cross_entropy(Var logits, const Matrix& onehot_labels,
                            const std::vector<double>& row_weights = {});
  // Mean over entries of the stable logistic loss; labels in {0,1}.
  Var binary_cross_entropy_with_logits(Var logits, const Matrix& labels);

  void backward(Var loss);

  const Matrix& value(Var v) const;
  // Accumulated gradient of a leaf (or a parameter's live grad).
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const;

 private:
  using PullFn = std::function<void(Tape&, const Matrix& g, std::vector<Matrix>& sweep)>;

  struct Node {
    Matrix value;
    Matrix acc_grad;             // leaves without a bound parameter
    Parameter* bound = nullptr;  // leaves created via param()
    bool requires_grad = false;
    bool is_leaf = false;
    PullFn pull;
  };

  Var push(Matrix value, bool requires_grad, PullFn pull);
  const Node& node(Var v) const;
  static void accumulate(std::vector<Matrix>& sweep, int id, int rows, int cols,
                         const Matrix& delta);
  static Matrix& target(std::vector<Matrix>& sweep, int id, int rows, int cols);

  // deque keeps value()/grad() references stable while later ops record
  std::deque<Node> nodes_;
};

// Max relative error between the tape gradient and central differences of a
// scalar-valued function of one matrix; denominator max(|a|, |n|, 1e-8).
using MatrixFn = std::function<Var(Tape&, Var)>;
double grad_check(const MatrixFn& f, const Matrix& at, double eps = 1e-5);

// Same check against a live Parameter referenced inside the forward closure.
using ForwardFn = std::function<Var(Tape&)>;
double grad_check_param(const ForwardFn& f, Parameter& p, double eps = 1e-5);

}  // namespace evogcn
