#include "evogcn/autodiff.hpp"

#include <cmath>
#include <utility>

#include "evogcn/errors.hpp"

namespace evogcn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log clamped so that all-zero softmax entries cannot produce -inf
constexpr double kLogFloor = -745.0;

double clamped_log(double x) {
  const double l = std::log(x);
  return l < kLogFloor ? kLogFloor : l;
}

Matrix row_softmax(const Matrix& logits) {
  Matrix s(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    double m = logits.at(i, 0);
    for (int j = 1; j < logits.cols(); ++j) m = std::max(m, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols(); ++j) {
      const double e = std::exp(logits.at(i, j) - m);
      s.at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < logits.cols(); ++j) s.at(i, j) /= z;
  }
  return s;
}

}  // namespace

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

void Tape::clear() { nodes_.clear(); }

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw ArgumentError("invalid tape handle");
  }
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.is_leaf) throw ArgumentError("grad() is only defined for leaves");
  return n.bound ? n.bound->grad : n.acc_grad;
}

Var Tape::push(Matrix value, bool requires_grad, PullFn pull) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.pull = requires_grad ? std::move(pull) : PullFn{};
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Var v = push(std::move(value), requires_grad, nullptr);
  Node& n = nodes_[v.id];
  n.is_leaf = true;
  if (requires_grad) n.acc_grad = Matrix(n.value.rows(), n.value.cols());
  return v;
}

Var Tape::param(Parameter& p) {
  Var v = push(p.value, true, nullptr);
  Node& n = nodes_[v.id];
  n.is_leaf = true;
  n.bound = &p;
  return v;
}

Matrix& Tape::target(std::vector<Matrix>& sweep, int id, int rows, int cols) {
  if (sweep[id].empty()) sweep[id] = Matrix(rows, cols);
  return sweep[id];
}

void Tape::accumulate(std::vector<Matrix>& sweep, int id, int rows, int cols,
                      const Matrix& delta) {
  target(sweep, id, rows, cols).add_in_place(delta);
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul shape mismatch: " + av.shape_str() + " * " + bv.shape_str());
  }
  const bool need_a = requires_grad(a);
  const bool need_b = requires_grad(b);
  Var out = push(evogcn::matmul(av, bv), need_a || need_b, nullptr);
  if (need_a || need_b) {
    nodes_[out.id].pull = [a, b, need_a, need_b](Tape& t, const Matrix& g,
                                                 std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      const Matrix& bv = t.value(b);
      if (need_a) {
        matmul_acc(target(sweep, a.id, av.rows(), av.cols()), g, transposed(bv));
      }
      if (need_b) {
        matmul_acc(target(sweep, b.id, bv.rows(), bv.cols()), transposed(av), g);
      }
    };
  }
  return out;
}

Var Tape::elementwise(Var a, Var b, Elementwise kind) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  const bool broadcast = bv.cols() == 1 && bv.rows() == av.rows() && av.cols() != 1;
  if (!broadcast && !av.same_shape(bv)) {
    throw DimensionError("elementwise shape mismatch: " + av.shape_str() + " vs " +
                         bv.shape_str());
  }
  Matrix out(av.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i) {
    for (int j = 0; j < av.cols(); ++j) {
      const double x = av.at(i, j);
      const double y = broadcast ? bv.at(i, 0) : bv.at(i, j);
      switch (kind) {
        case Elementwise::add: out.at(i, j) = x + y; break;
        case Elementwise::subtract: out.at(i, j) = x - y; break;
        case Elementwise::hadamard: out.at(i, j) = x * y; break;
      }
    }
  }
  const bool need_a = requires_grad(a);
  const bool need_b = requires_grad(b);
  Var o = push(std::move(out), need_a || need_b, nullptr);
  if (need_a || need_b) {
    nodes_[o.id].pull = [a, b, kind, broadcast, need_a, need_b](
                            Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      const Matrix& bv = t.value(b);
      if (need_a) {
        Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) {
            const double gij = g.at(i, j);
            ta.at(i, j) += kind == Elementwise::hadamard
                               ? gij * (broadcast ? bv.at(i, 0) : bv.at(i, j))
                               : gij;
          }
        }
      }
      if (need_b) {
        Matrix& tb = target(sweep, b.id, bv.rows(), bv.cols());
        const double sign = kind == Elementwise::subtract ? -1.0 : 1.0;
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) {
            const double gij = g.at(i, j);
            double delta;
            switch (kind) {
              case Elementwise::hadamard: delta = gij * av.at(i, j); break;
              default: delta = sign * gij; break;
            }
            tb.at(i, broadcast ? 0 : j) += delta;
          }
        }
      }
    };
  }
  return o;
}

Var Tape::activation(Var a, Activation kind) {
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i) {
    for (int j = 0; j < av.cols(); ++j) {
      const double x = av.at(i, j);
      switch (kind) {
        case Activation::identity: out.at(i, j) = x; break;
        case Activation::relu: out.at(i, j) = x > 0.0 ? x : 0.0; break;
        case Activation::sigmoid: out.at(i, j) = sigmoid(x); break;
        case Activation::tanh: out.at(i, j) = std::tanh(x); break;
      }
    }
  }
  Var o = push(std::move(out), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    const int out_id = o.id;
    nodes_[o.id].pull = [a, kind, out_id](Tape& t, const Matrix& g,
                                          std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      const Matrix& ov = t.nodes_[out_id].value;
      Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) {
          double d = 1.0;
          switch (kind) {
            case Activation::identity: d = 1.0; break;
            // derivative at exactly 0 defined as 0
            case Activation::relu: d = av.at(i, j) > 0.0 ? 1.0 : 0.0; break;
            case Activation::sigmoid: {
              const double s = ov.at(i, j);
              d = s * (1.0 - s);
              break;
            }
            case Activation::tanh: {
              const double y = ov.at(i, j);
              d = 1.0 - y * y;
              break;
            }
          }
          ta.at(i, j) += g.at(i, j) * d;
        }
      }
    };
  }
  return o;
}

Var Tape::scale(Var a, double factor) {
  Matrix out = value(a);
  out.scale_in_place(factor);
  Var o = push(std::move(out), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_[o.id].pull = [a, factor](Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) ta.at(i, j) += factor * g.at(i, j);
      }
    };
  }
  return o;
}

Var Tape::scale_by(Var a, Var s) {
  const Matrix& av = value(a);
  const double sv = value(s).scalar();
  Matrix out = av;
  out.scale_in_place(sv);
  const bool need_a = requires_grad(a);
  const bool need_s = requires_grad(s);
  Var o = push(std::move(out), need_a || need_s, nullptr);
  if (need_a || need_s) {
    nodes_[o.id].pull = [a, s, need_a, need_s](Tape& t, const Matrix& g,
                                               std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      const double sv = t.value(s).scalar();
      if (need_a) {
        Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) ta.at(i, j) += sv * g.at(i, j);
        }
      }
      if (need_s) {
        double acc = 0.0;
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) acc += g.at(i, j) * av.at(i, j);
        }
        target(sweep, s.id, 1, 1).at(0, 0) += acc;
      }
    };
  }
  return o;
}

Var Tape::epow(Var a, double exponent) {
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i) {
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) = std::pow(av.at(i, j), exponent);
  }
  Var o = push(std::move(out), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_[o.id].pull = [a, exponent](Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) {
          ta.at(i, j) += g.at(i, j) * exponent * std::pow(av.at(i, j), exponent - 1.0);
        }
      }
    };
  }
  return o;
}

Var Tape::reduce(Var a, Reduce kind) {
  const Matrix& av = value(a);
  Matrix out(1, 1);
  const double n = static_cast<double>(av.size());
  out.at(0, 0) = kind == Reduce::sum ? av.sum() : (n == 0.0 ? 0.0 : av.sum() / n);
  Var o = push(std::move(out), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_[o.id].pull = [a, kind](Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      const double per = kind == Reduce::sum
                             ? g.scalar()
                             : g.scalar() / static_cast<double>(av.size());
      Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
      for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) ta.at(i, j) += per;
      }
    };
  }
  return o;
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols row mismatch: " + av.shape_str() + " vs " +
                         bv.shape_str());
  }
  Matrix out(av.rows(), av.cols() + bv.cols());
  for (int i = 0; i < av.rows(); ++i) {
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(i, j);
    for (int j = 0; j < bv.cols(); ++j) out.at(i, av.cols() + j) = bv.at(i, j);
  }
  const bool need_a = requires_grad(a);
  const bool need_b = requires_grad(b);
  Var o = push(std::move(out), need_a || need_b, nullptr);
  if (need_a || need_b) {
    nodes_[o.id].pull = [a, b, need_a, need_b](Tape& t, const Matrix& g,
                                               std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      const Matrix& bv = t.value(b);
      if (need_a) {
        Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
        for (int i = 0; i < av.rows(); ++i) {
          for (int j = 0; j < av.cols(); ++j) ta.at(i, j) += g.at(i, j);
        }
      }
      if (need_b) {
        Matrix& tb = target(sweep, b.id, bv.rows(), bv.cols());
        for (int i = 0; i < bv.rows(); ++i) {
          for (int j = 0; j < bv.cols(); ++j) tb.at(i, j) += g.at(i, av.cols() + j);
        }
      }
    };
  }
  return o;
}

Var Tape::transpose(Var a) {
  Var o = push(transposed(value(a)), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_[o.id].pull = [a](Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      accumulate(sweep, a.id, av.rows(), av.cols(), transposed(g));
    };
  }
  return o;
}

Var Tape::gather_rows(Var a, std::vector<int> index) {
  const Matrix& av = value(a);
  for (int r : index) {
    if (r < 0 || r >= av.rows()) {
      throw ArgumentError("gather_rows index " + std::to_string(r) +
                          " out of range for " + av.shape_str());
    }
  }
  Matrix out(static_cast<int>(index.size()), av.cols());
  for (int i = 0; i < out.rows(); ++i) {
    const double* src = av.row(index[i]);
    double* dst = out.row(i);
    for (int j = 0; j < av.cols(); ++j) dst[j] = src[j];
  }
  Var o = push(std::move(out), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_[o.id].pull = [a, index = std::move(index)](Tape& t, const Matrix& g,
                                                      std::vector<Matrix>& sweep) {
      const Matrix& av = t.value(a);
      Matrix& ta = target(sweep, a.id, av.rows(), av.cols());
      for (int i = 0; i < g.rows(); ++i) {
        double* dst = ta.row(index[i]);
        const double* src = g.row(i);
        for (int j = 0; j < g.cols(); ++j) dst[j] += src[j];
      }
    };
  }
  return o;
}

Var Tape::spmm(const SparseAdjacency& a, Var h) {
  const Matrix& hv = value(h);
  Matrix out = spmm_value(a, hv);
  Var o = push(std::move(out), requires_grad(h), nullptr);
  if (requires_grad(h)) {
    nodes_[o.id].pull = [&a, h](Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& hv = t.value(h);
      Matrix& th = target(sweep, h.id, hv.rows(), hv.cols());
      const int d = g.cols();
      for (int r = 0; r < a.n(); ++r) {
        const double* grow = g.row(r);
        for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
          double* drow = th.row(a.col_index()[k]);
          const double w = a.weights()[k];
          for (int j = 0; j < d; ++j) drow[j] += w * grow[j];
        }
      }
    };
  }
  return o;
}

Var Tape::softmax_cross_entropy(Var logits, const Matrix& onehot_labels,
                                const std::vector<double>& row_weights) {
  const Matrix& lv = value(logits);
  if (lv.rows() == 0 || lv.cols() == 0) throw ArgumentError("empty logits");
  if (!lv.same_shape(onehot_labels)) {
    throw DimensionError("labels shape " + onehot_labels.shape_str() +
                         " does not match logits " + lv.shape_str());
  }
  if (!row_weights.empty() && static_cast<int>(row_weights.size()) != lv.rows()) {
    throw ArgumentError("row_weights size " + std::to_string(row_weights.size()) +
                        " does not match " + std::to_string(lv.rows()) + " rows");
  }
  for (int i = 0; i < onehot_labels.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < onehot_labels.cols(); ++j) s += onehot_labels.at(i, j);
    if (std::abs(s - 1.0) > 1e-9) {
      throw ArgumentError("label row " + std::to_string(i) + " sums to " +
                          std::to_string(s) + ", expected 1");
    }
  }

  Matrix soft = row_softmax(lv);
  const double n = static_cast<double>(lv.rows());
  double loss = 0.0;
  for (int i = 0; i < lv.rows(); ++i) {
    const double w = row_weights.empty() ? 1.0 : row_weights[i];
    double row_loss = 0.0;
    for (int j = 0; j < lv.cols(); ++j) {
      const double y = onehot_labels.at(i, j);
      if (y != 0.0) row_loss -= y * clamped_log(soft.at(i, j));
    }
    loss += w * row_loss;
  }
  Matrix out(1, 1);
  out.at(0, 0) = loss / n;

  Var o = push(std::move(out), requires_grad(logits), nullptr);
  if (requires_grad(logits)) {
    nodes_[o.id].pull = [logits, soft = std::move(soft), labels = onehot_labels,
                         row_weights](Tape& t, const Matrix& g, std::vector<Matrix>& sweep) {
      const Matrix& lv = t.value(logits);
      const double gs = g.scalar() / static_cast<double>(lv.rows());
      Matrix& tl = target(sweep, logits.id, lv.rows(), lv.cols());
      for (int i = 0; i < lv.rows(); ++i) {
        const double w = row_weights.empty() ? 1.0 : row_weights[i];
        for (int j = 0; j < lv.cols(); ++j) {
          tl.at(i, j) += gs * w * (soft.at(i, j) - labels.at(i, j));
        }
      }
    };
  }
  return o;
}

Var Tape::binary_cross_entropy_with_logits(Var logits, const Matrix& labels) {
  const Matrix& lv = value(logits);
  if (lv.size() == 0) throw ArgumentError("empty logits");
  if (!lv.same_shape(labels)) {
    throw DimensionError("labels shape " + labels.shape_str() + " does not match logits " +
                         lv.shape_str());
  }
  const double k = static_cast<double>(lv.size());
  double loss = 0.0;
  for (int i = 0; i < lv.rows(); ++i) {
    for (int j = 0; j < lv.cols(); ++j) {
      const double z = lv.at(i, j);
      const double y = labels.at(i, j);
      loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
  }
  Matrix out(1, 1);
  out.at(0, 0) = loss / k;

  Var o = push(std::move(out), requires_grad(logits), nullptr);
  if (requires_grad(logits)) {
    nodes_[o.id].pull = [logits, labels](Tape& t, const Matrix& g,
                                         std::vector<Matrix>& sweep) {
      const Matrix& lv = t.value(logits);
      const double gs = g.scalar() / static_cast<double>(lv.size());
      Matrix& tl = target(sweep, logits.id, lv.rows(), lv.cols());
      for (int i = 0; i < lv.rows(); ++i) {
        for (int j = 0; j < lv.cols(); ++j) {
          tl.at(i, j) += gs * (sigmoid(lv.at(i, j)) - labels.at(i, j));
        }
      }
    };
  }
  return o;
}

void Tape::backward(Var loss) {
  const Node& ln = node(loss);
  if (!ln.value.is_scalar()) {
    throw ArgumentError("backward requires a scalar loss, got " + ln.value.shape_str());
  }
  std::vector<Matrix> sweep(loss.id + 1);
  sweep[loss.id] = Matrix::ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    if (sweep[i].empty()) continue;
    const Node& n = nodes_[i];
    if (n.pull) n.pull(*this, sweep[i], sweep);
  }
  for (int i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (!n.is_leaf || !n.requires_grad || sweep[i].empty()) continue;
    if (n.bound) {
      n.bound->grad.add_in_place(sweep[i]);
    } else {
      n.acc_grad.add_in_place(sweep[i]);
    }
  }
}

double grad_check(const MatrixFn& f, const Matrix& at, double eps) {
  if (eps <= 0.0) throw ArgumentError("grad_check eps must be positive");

  Tape tape;
  Var x = tape.leaf(at, true);
  Var loss = f(tape, x);
  if (!tape.value(loss).is_scalar()) {
    throw ArgumentError("grad_check requires a scalar-valued function");
  }
  tape.backward(loss);
  const Matrix analytic = tape.grad(x);

  auto eval = [&](const Matrix& point) {
    Tape t;
    Var v = t.leaf(point, false);
    return t.value(f(t, v)).scalar();
  };

  double max_rel = 0.0;
  Matrix probe = at;
  for (int i = 0; i < at.rows(); ++i) {
    for (int j = 0; j < at.cols(); ++j) {
      const double orig = probe.at(i, j);
      probe.at(i, j) = orig + eps;
      const double fp = eval(probe);
      probe.at(i, j) = orig - eps;
      const double fm = eval(probe);
      probe.at(i, j) = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic.at(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

double grad_check_param(const ForwardFn& f, Parameter& p, double eps) {
  if (eps <= 0.0) throw ArgumentError("grad_check eps must be positive");

  p.zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    if (!tape.value(loss).is_scalar()) {
      throw ArgumentError("grad_check requires a scalar-valued function");
    }
    tape.backward(loss);
  }
  const Matrix analytic = p.grad;

  auto eval = [&]() {
    Tape t;
    return t.value(f(t)).scalar();
  };

  double max_rel = 0.0;
  for (int i = 0; i < p.value.rows(); ++i) {
    for (int j = 0; j < p.value.cols(); ++j) {
      const double orig = p.value.at(i, j);
      p.value.at(i, j) = orig + eps;
      const double fp = eval();
      p.value.at(i, j) = orig - eps;
      const double fm = eval();
      p.value.at(i, j) = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic.at(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  p.zero_grad();
  return max_rel;
}

}  // namespace evogcn
