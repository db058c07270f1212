#include <cmath>
#include <random>

#include <doctest.h>

#include "evogcn/autodiff.hpp"
#include "evogcn/errors.hpp"
#include "oracles.hpp"

using namespace evogcn;

TEST_CASE("matmul values") {
  Tape t;
  Var id2 = t.leaf(Matrix::identity(2));
  Var m = t.leaf(Matrix::from_rows({{1, 2}, {3, 4}}));
  CHECK(max_abs_diff(t.value(t.matmul(id2, m)), t.value(m)) == 0.0);

  Var a = t.leaf(Matrix::from_rows({{1, 2}}));
  Var b = t.leaf(Matrix::from_rows({{3}, {4}}));
  CHECK(t.value(t.matmul(a, b)).scalar() == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul gradient matches the hand value and finite differences") {
  const Matrix a_val = Matrix::from_rows({{1, 1}});
  const Matrix b_val = Matrix::from_rows({{2}, {5}});
  Tape t;
  Var a = t.leaf(a_val, true);
  Var b = t.leaf(b_val);
  t.backward(t.reduce(t.matmul(a, b), Reduce::sum));
  CHECK(t.grad(a).at(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(t.grad(a).at(0, 1) == doctest::Approx(5.0).epsilon(1e-14));

  const double err = grad_check(
      [&](Tape& tape, Var x) { return tape.reduce(tape.matmul(x, tape.leaf(b_val)), Reduce::sum); },
      a_val, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape t;
  Var a = t.leaf(Matrix(2, 3));
  Var b = t.leaf(Matrix(2, 3));
  CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("2x3"), DimensionError);
}

TEST_CASE("elementwise add identity and hadamard") {
  Tape t;
  Var x = t.leaf(Matrix::from_rows({{1.5, -2.5}}));
  Var zero = t.leaf(Matrix(1, 2));
  CHECK(max_abs_diff(t.value(t.add(zero, x)), t.value(x)) == 0.0);

  Var a = t.leaf(Matrix::from_rows({{2, 3}}));
  Var b = t.leaf(Matrix::from_rows({{4, 5}}));
  const Matrix& h = t.value(t.hadamard(a, b));
  CHECK(h.at(0, 0) == 8.0);
  CHECK(h.at(0, 1) == 15.0);
}

TEST_CASE("hadamard with a zero operand annihilates values and gradients") {
  Tape t;
  Var x = t.leaf(Matrix::from_rows({{3, -7}}), true);
  Var zero = t.leaf(Matrix(1, 2));
  Var prod = t.hadamard(x, zero);
  CHECK(t.value(prod).max_abs() == 0.0);
  t.backward(t.reduce(prod, Reduce::sum));
  CHECK(t.grad(x).max_abs() == 0.0);  // d(x*0)/dx = 0
}

TEST_CASE("column-vector bias broadcast and its gradient") {
  const Matrix a_val = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix b_val = Matrix::from_rows({{10}, {20}});
  Tape t;
  Var a = t.leaf(a_val);
  Var b = t.leaf(b_val, true);
  Var sum = t.add(a, b);
  CHECK(t.value(sum).at(0, 2) == 13.0);
  CHECK(t.value(sum).at(1, 0) == 24.0);
  t.backward(t.reduce(sum, Reduce::sum));
  // gradient of a broadcast bias sums over the broadcast axis
  CHECK(t.grad(b).at(0, 0) == 3.0);
  CHECK(t.grad(b).at(1, 0) == 3.0);

  const double err = grad_check(
      [&](Tape& tape, Var x) {
        Var o = tape.hadamard(tape.add(tape.leaf(a_val), x), tape.add(tape.leaf(a_val), x));
        return tape.reduce(o, Reduce::sum);
      },
      b_val, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("incompatible elementwise shapes throw") {
  Tape t;
  Var a = t.leaf(Matrix(2, 3));
  Var b = t.leaf(Matrix(3, 2));
  CHECK_THROWS_AS(t.add(a, b), DimensionError);
}

TEST_CASE("activations at the anchor points") {
  Tape t;
  Var zero = t.leaf(Matrix(1, 1));
  CHECK(t.value(t.activation(zero, Activation::sigmoid)).scalar() == 0.5);
  CHECK(t.value(t.activation(zero, Activation::tanh)).scalar() == 0.0);

  Var x = t.leaf(Matrix::from_rows({{-1, 2}}));
  const Matrix& r = t.value(t.activation(x, Activation::relu));
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(0, 1) == 2.0);
}

TEST_CASE("relu derivative at exactly zero is zero") {
  Tape t;
  Var x = t.leaf(Matrix::from_rows({{0.0, 1.0, -1.0}}), true);
  t.backward(t.reduce(t.activation(x, Activation::relu), Reduce::sum));
  CHECK(t.grad(x).at(0, 0) == 0.0);
  CHECK(t.grad(x).at(0, 1) == 1.0);
  CHECK(t.grad(x).at(0, 2) == 0.0);
}

TEST_CASE("softmax cross-entropy anchor values") {
  Tape t;
  Var equal = t.leaf(Matrix::from_rows({{0.7, 0.7}}));
  Matrix label = Matrix::from_rows({{1, 0}});
  CHECK(t.value(t.softmax_cross_entropy(equal, label)).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Var saturated = t.leaf(Matrix::from_rows({{500.0, 0.0}}));
  CHECK(t.value(t.softmax_cross_entropy(saturated, label)).scalar() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax cross-entropy matches an independent evaluation") {
  std::mt19937_64 rng(11);
  const Matrix logits = Matrix::uniform(3, 4, -2.0, 2.0, rng);
  Matrix onehot(3, 4);
  onehot.at(0, 2) = 1.0;
  onehot.at(1, 0) = 1.0;
  onehot.at(2, 3) = 1.0;
  Tape t;
  const double got = t.value(t.softmax_cross_entropy(t.leaf(logits), onehot)).scalar();
  CHECK(got == doctest::Approx(oracle::softmax_xent_reference(logits, onehot)).epsilon(1e-12));
}

TEST_CASE("softmax cross-entropy rejects empty and non-one-hot input") {
  Tape t;
  CHECK_THROWS_AS(t.softmax_cross_entropy(t.leaf(Matrix(0, 0)), Matrix(0, 0)), ArgumentError);
  Var logits = t.leaf(Matrix(1, 2));
  CHECK_THROWS_AS(t.softmax_cross_entropy(logits, Matrix::from_rows({{0.5, 0.2}})),
                  ArgumentError);
}

TEST_CASE("reduce anchors") {
  Tape t;
  CHECK(t.value(t.reduce(t.leaf(Matrix::from_rows({{1, 2}, {3, 4}})), Reduce::sum)).scalar() ==
        10.0);
  CHECK(t.value(t.reduce(t.leaf(Matrix(3, 3)), Reduce::mean)).scalar() == 0.0);

  Var x = t.leaf(Matrix::from_rows({{1, 2}, {3, 4}}), true);
  t.backward(t.reduce(x, Reduce::mean));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(t.grad(x).at(i, j) == 0.25);
  }
}

TEST_CASE("concat and transpose") {
  Tape t;
  Var a = t.leaf(Matrix::from_rows({{1}}));
  Var b = t.leaf(Matrix::from_rows({{2}}));
  const Matrix& c = t.value(t.concat_cols(a, b));
  CHECK(c.rows() == 1);
  CHECK(c.cols() == 2);
  CHECK(c.at(0, 1) == 2.0);

  Var m = t.leaf(Matrix::from_rows({{1, 2}, {3, 4}}));
  const Matrix& tr = t.value(t.transpose(m));
  CHECK(tr.at(0, 1) == 3.0);
  CHECK(tr.at(1, 0) == 2.0);
  CHECK(max_abs_diff(t.value(t.transpose(t.transpose(m))), t.value(m)) == 0.0);

  Var bad = t.leaf(Matrix(2, 1));
  CHECK_THROWS_AS(t.concat_cols(a, bad), DimensionError);
}

TEST_CASE("backward fills leaf gradients") {
  Tape t;
  Var w = t.leaf(Matrix(2, 2), true);
  t.backward(t.reduce(w, Reduce::sum));
  CHECK(max_abs_diff(t.grad(w), Matrix::ones(2, 2)) == 0.0);

  Tape t2;
  Var w2 = t2.leaf(Matrix::from_rows({{3}}), true);
  t2.backward(t2.reduce(t2.hadamard(w2, w2), Reduce::sum));
  CHECK(t2.grad(w2).scalar() == 6.0);  // d(w^2) = 2w
}

TEST_CASE("fan-out sums gradients exactly") {
  Tape t;
  Var w = t.leaf(Matrix::from_rows({{1.25, -0.5}}), true);
  Var loss = t.add(t.reduce(w, Reduce::sum), t.reduce(w, Reduce::sum));
  t.backward(loss);
  CHECK(t.grad(w).at(0, 0) == 2.0);
  CHECK(t.grad(w).at(0, 1) == 2.0);

  // k copies scale exactly k times
  Tape t2;
  Var w2 = t2.leaf(Matrix::from_rows({{0.75}}), true);
  Var acc = t2.reduce(w2, Reduce::sum);
  for (int k = 1; k < 5; ++k) acc = t2.add(acc, t2.reduce(w2, Reduce::sum));
  t2.backward(acc);
  CHECK(t2.grad(w2).scalar() == 5.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape t;
  Var w = t.leaf(Matrix(2, 2), true);
  CHECK_THROWS_AS(t.backward(w), ArgumentError);
}

TEST_CASE("repeated backward calls accumulate into parameters") {
  Parameter p("p", Matrix::from_rows({{2.0}}));
  Tape t;
  Var v = t.param(p);
  Var loss = t.reduce(t.hadamard(v, v), Reduce::sum);
  t.backward(loss);
  CHECK(p.grad.scalar() == 4.0);
  t.backward(loss);
  CHECK(p.grad.scalar() == 8.0);
  p.zero_grad();
  CHECK(p.grad.scalar() == 0.0);
}

TEST_CASE("forward and backward are deterministic after zeroing") {
  std::mt19937_64 rng(3);
  const Matrix a = Matrix::uniform(4, 4, -1.0, 1.0, rng);
  Parameter p("p", Matrix::uniform(4, 4, -1.0, 1.0, rng));

  auto run = [&]() {
    p.zero_grad();
    Tape t;
    Var loss = t.reduce(t.activation(t.matmul(t.param(p), t.leaf(a)), Activation::tanh),
                        Reduce::mean);
    t.backward(loss);
    return p.grad;
  };
  const Matrix g1 = run();
  const Matrix g2 = run();
  CHECK(max_abs_diff(g1, g2) == 0.0);  // bit-identical
}

TEST_CASE("grad_check on a linear function is exact to roundoff") {
  std::mt19937_64 rng(5);
  const double err = grad_check(
      [](Tape& t, Var x) { return t.reduce(x, Reduce::sum); },
      Matrix::uniform(3, 3, -1.0, 1.0, rng), 1e-5);
  CHECK(err < 1e-10);
}

TEST_CASE("binary cross-entropy with logits") {
  Tape t;
  Matrix labels = Matrix::from_rows({{1}, {0}});
  Var logits = t.leaf(Matrix(2, 1));
  CHECK(t.value(t.binary_cross_entropy_with_logits(logits, labels)).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Var confident = t.leaf(Matrix::from_rows({{40.0}, {-40.0}}));
  CHECK(t.value(t.binary_cross_entropy_with_logits(confident, labels)).scalar() < 1e-6);
}

TEST_CASE("gather_rows duplicates sum on the way back") {
  Tape t;
  Var x = t.leaf(Matrix::from_rows({{1, 2}, {3, 4}}), true);
  Var g = t.gather_rows(x, {0, 0, 1});
  CHECK(t.value(g).rows() == 3);
  t.backward(t.reduce(g, Reduce::sum));
  CHECK(t.grad(x).at(0, 0) == 2.0);
  CHECK(t.grad(x).at(1, 0) == 1.0);
}
