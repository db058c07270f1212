#include "evogcn/gradcheck_suite.hpp"

#include <cmath>
#include <random>

#include "evogcn/cells.hpp"
#include "evogcn/graph.hpp"
#include "evogcn/heads.hpp"
#include "evogcn/model.hpp"
#include "evogcn/sbm.hpp"

namespace evogcn {

namespace {

constexpr double kEps = 1e-5;
constexpr double kTol = 1e-4;

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  return Matrix::uniform(rows, cols, -1.0, 1.0, rng);
}

// keeps finite differences away from the relu kink at 0
Matrix random_matrix_off_kink(int rows, int cols, std::mt19937_64& rng) {
  Matrix m = random_matrix(rows, cols, rng);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double& v = m.at(i, j);
      if (std::abs(v) < 0.05) v = v < 0.0 ? v - 0.05 : v + 0.05;
    }
  }
  return m;
}

Matrix random_onehot(int rows, int cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::uniform_int_distribution<int> pick(0, cols - 1);
  for (int i = 0; i < rows; ++i) m.at(i, pick(rng)) = 1.0;
  return m;
}

SparseAdjacency random_graph(int n, double density, std::mt19937_64& rng) {
  SparseAdjacency a(n);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng) < density) {
        a.add_edge(i, j, 1.0);
        a.add_edge(j, i, 1.0);
      }
    }
  }
  a.finalize();
  return a;
}

struct Suite {
  std::vector<GradCheckResult> results;

  void check(const std::string& name, double err) {
    results.push_back({name, err, kTol, err < kTol});
  }
};

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Suite suite;

  // --- primitive operations -------------------------------------------
  {
    const Matrix b = random_matrix(4, 3, rng);
    suite.check("matmul/left", grad_check(
        [&](Tape& t, Var x) {
          return t.reduce(t.matmul(x, t.leaf(b)), Reduce::sum);
        },
        random_matrix(3, 4, rng), kEps));
    const Matrix a = random_matrix(3, 4, rng);
    suite.check("matmul/right", grad_check(
        [&](Tape& t, Var x) {
          return t.reduce(t.matmul(t.leaf(a), x), Reduce::sum);
        },
        random_matrix(4, 3, rng), kEps));
  }
  {
    const Matrix other = random_matrix(3, 4, rng);
    for (auto [kind, name] : {std::pair{Elementwise::add, "elementwise/add"},
                              {Elementwise::subtract, "elementwise/subtract"},
                              {Elementwise::hadamard, "elementwise/hadamard"}}) {
      suite.check(name, grad_check(
          [&, kind = kind](Tape& t, Var x) {
            Var o = t.elementwise(t.leaf(other), x, kind);
            return t.reduce(t.hadamard(o, o), Reduce::sum);
          },
          random_matrix(3, 4, rng), kEps));
    }
    suite.check("elementwise/bias-broadcast", grad_check(
        [&](Tape& t, Var x) {
          Var o = t.add(t.leaf(other), x);
          return t.reduce(t.hadamard(o, o), Reduce::sum);
        },
        random_matrix(3, 1, rng), kEps));
    suite.check("elementwise/scale-rows-broadcast", grad_check(
        [&](Tape& t, Var x) {
          return t.reduce(t.hadamard(t.leaf(other), x), Reduce::sum);
        },
        random_matrix(3, 1, rng), kEps));
  }
  for (auto [act, name] : {std::pair{Activation::sigmoid, "activation/sigmoid"},
                           {Activation::tanh, "activation/tanh"},
                           {Activation::relu, "activation/relu"},
                           {Activation::identity, "activation/identity"}}) {
    suite.check(name, grad_check(
        [act = act](Tape& t, Var x) {
          return t.reduce(t.activation(x, act), Reduce::mean);
        },
        random_matrix_off_kink(3, 4, rng), kEps));
  }
  {
    const Matrix labels = random_onehot(3, 4, rng);
    suite.check("softmax_cross_entropy", grad_check(
        [&](Tape& t, Var x) { return t.softmax_cross_entropy(x, labels); },
        random_matrix(3, 4, rng), kEps));
    suite.check("softmax_cross_entropy/weighted", grad_check(
        [&](Tape& t, Var x) {
          return t.softmax_cross_entropy(x, labels, {0.5, 2.0, 1.25});
        },
        random_matrix(3, 4, rng), kEps));
  }
  {
    Matrix labels(5, 1);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < 5; ++i) labels.at(i, 0) = coin(rng);
    suite.check("binary_cross_entropy_with_logits", grad_check(
        [&](Tape& t, Var x) { return t.binary_cross_entropy_with_logits(x, labels); },
        random_matrix(5, 1, rng), kEps));
  }
  suite.check("reduce/sum", grad_check(
      [](Tape& t, Var x) { return t.reduce(x, Reduce::sum); },
      random_matrix(3, 4, rng), kEps));
  suite.check("reduce/mean", grad_check(
      [](Tape& t, Var x) { return t.reduce(x, Reduce::mean); },
      random_matrix(3, 4, rng), kEps));
  {
    const Matrix other = random_matrix(3, 2, rng);
    suite.check("concat_cols", grad_check(
        [&](Tape& t, Var x) {
          Var o = t.concat_cols(x, t.leaf(other));
          return t.reduce(t.hadamard(o, o), Reduce::sum);
        },
        random_matrix(3, 4, rng), kEps));
  }
  suite.check("transpose", grad_check(
      [](Tape& t, Var x) {
        Var o = t.transpose(x);
        return t.reduce(t.hadamard(o, o), Reduce::sum);
      },
      random_matrix(3, 4, rng), kEps));
  suite.check("gather_rows", grad_check(
      [](Tape& t, Var x) {
        Var o = t.gather_rows(x, {2, 0, 2, 1});  // repeated row exercises fan-out
        return t.reduce(t.hadamard(o, o), Reduce::sum);
      },
      random_matrix(3, 4, rng), kEps));
  suite.check("scale", grad_check(
      [](Tape& t, Var x) { return t.reduce(t.scale(x, -1.7), Reduce::sum); },
      random_matrix(3, 4, rng), kEps));
  {
    const Matrix a = random_matrix(3, 4, rng);
    suite.check("scale_by", grad_check(
        [&](Tape& t, Var x) {
          return t.reduce(t.scale_by(t.leaf(a, false), x), Reduce::sum);
        },
        random_matrix(1, 1, rng), kEps));
  }
  {
    Matrix positive = Matrix::uniform(3, 4, 0.5, 2.0, rng);
    suite.check("epow", grad_check(
        [](Tape& t, Var x) { return t.reduce(t.epow(x, -0.5), Reduce::sum); },
        positive, kEps));
  }
  {
    const SparseAdjacency a = random_graph(6, 0.5, rng);
    suite.check("spmm", grad_check(
        [&](Tape& t, Var x) {
          Var o = t.spmm(a, x);
          return t.reduce(t.hadamard(o, o), Reduce::sum);
        },
        random_matrix(6, 3, rng), kEps));
  }

  // --- cells and the convolution unit ---------------------------------
  {
    SummarizeParams summ("gc.summarize", 3, rng);
    suite.check("summarize/input", grad_check(
        [&](Tape& t, Var x) {
          return t.reduce(t.epow(summarize(t, x, 3, summ), 2.0), Reduce::sum);
        },
        random_matrix_off_kink(5, 3, rng), kEps));
    const Matrix at = random_matrix_off_kink(5, 3, rng);
    suite.check("summarize/p", grad_check_param(
        [&](Tape& t) {
          Var x = t.leaf(at);
          return t.reduce(t.epow(summarize(t, x, 3, summ), 2.0), Reduce::sum);
        },
        summ.p, kEps));
  }
  {
    MatrixGruParams gru("gc.gru", 3, rng);
    const Matrix h_prev = random_matrix(3, 4, rng);
    const Matrix x_in = random_matrix(3, 4, rng);
    suite.check("matrix_gru/input", grad_check(
        [&](Tape& t, Var x) {
          Var o = matrix_gru(t, x, t.leaf(h_prev), gru);
          return t.reduce(t.hadamard(o, o), Reduce::sum);
        },
        x_in, kEps));
    suite.check("matrix_gru/hidden", grad_check(
        [&](Tape& t, Var h) {
          Var o = matrix_gru(t, t.leaf(x_in), h, gru);
          return t.reduce(t.hadamard(o, o), Reduce::sum);
        },
        h_prev, kEps));
    for (Parameter* p : gru.params()) {
      suite.check("matrix_gru/" + p->name, grad_check_param(
          [&](Tape& t) {
            Var o = matrix_gru(t, t.leaf(x_in), t.leaf(h_prev), gru);
            return t.reduce(t.hadamard(o, o), Reduce::sum);
          },
          *p, kEps));
    }
  }
  {
    MatrixLstmParams lstm("gc.lstm", 3, rng);
    const Matrix w_prev = random_matrix(3, 4, rng);
    const Matrix cell = random_matrix(3, 4, rng);
    suite.check("matrix_lstm/input", grad_check(
        [&](Tape& t, Var w) {
          LstmOut o = matrix_lstm(t, w, t.leaf(cell), lstm);
          return t.reduce(t.hadamard(o.output, o.output), Reduce::sum);
        },
        w_prev, kEps));
    for (Parameter* p : lstm.params()) {
      suite.check("matrix_lstm/" + p->name, grad_check_param(
          [&](Tape& t) {
            LstmOut o = matrix_lstm(t, t.leaf(w_prev), t.leaf(cell), lstm);
            return t.reduce(t.hadamard(o.output, o.output), Reduce::sum);
          },
          *p, kEps));
    }
  }
  {
    const SparseAdjacency g = random_graph(6, 0.5, rng);
    const SparseAdjacency a_hat = normalize_adjacency(g);
    const Matrix h = random_matrix_off_kink(6, 3, rng);
    suite.check("gconv/weights", grad_check(
        [&](Tape& t, Var w) {
          Var o = gconv(t, a_hat, t.leaf(h), w, Activation::relu);
          return t.reduce(t.hadamard(o, o), Reduce::sum);
        },
        random_matrix(3, 2, rng), kEps));
  }

  // --- end-to-end losses ------------------------------------------------
  // 2-layer models over a 3-step window on a 6-node random graph, checked
  // against every trainable parameter.
  {
    SbmConfig data_cfg;
    data_cfg.nodes = 6;
    data_cfg.communities = 2;
    data_cfg.intra = 0.9;
    data_cfg.inter = 0.4;
    data_cfg.migrate_per_step = 1;
    data_cfg.steps = 4;
    data_cfg.seed = seed + 13;
    data_cfg.feature_cap = 4;
    const TemporalGraph tg = generate_sbm(data_cfg);

    for (Variant variant : {Variant::h, Variant::o}) {
      ModelConfig mc;
      mc.variant = variant;
      mc.feature_dim = tg.snapshots[0].features.cols();
      mc.embedding = 4;
      mc.num_layers = 2;
      EvolveModel model(mc, rng);
      MlpHead head("head", 2 * mc.embedding, 1, rng);

      std::vector<std::pair<int, int>> pairs;
      std::vector<int> labels;
      for (const auto& [u, v] : tg.snapshots[3].edges()) {
        if (u >= v) continue;
        pairs.emplace_back(u, v);
        labels.push_back(1);
        pairs.emplace_back(v, (u + 3) % 6 == v ? (u + 2) % 6 : (u + 3) % 6);
        labels.push_back(0);
      }

      auto loss_fn = [&](Tape& t) {
        WindowForward fw = model.forward_window(t, window_view(tg, 0, 3));
        Var logits = edge_pair_logits(t, fw.embeddings.back(), pairs, head);
        return link_loss(t, logits, labels);
      };
      const std::string tag = std::string("evolvegcn-") + to_string(variant);
      for (Parameter* p : model.trainable()) {
        suite.check(tag + "/" + p->name, grad_check_param(loss_fn, *p, kEps));
      }
      for (Parameter* p : head.params()) {
        suite.check(tag + "/" + p->name, grad_check_param(loss_fn, *p, kEps));
      }
    }

    // plain 2-layer GCN with softmax cross-entropy on one snapshot
    {
      ModelConfig mc;
      mc.variant = Variant::static_gcn;
      mc.feature_dim = tg.snapshots[0].features.cols();
      mc.embedding = 4;
      mc.num_layers = 2;
      EvolveModel model(mc, rng);
      MlpHead head("head", mc.embedding, 3, rng);
      const std::vector<int> nodes{0, 1, 2, 3, 4, 5};
      const std::vector<int> labels{0, 1, 2, 0, 1, 2};
      auto loss_fn = [&](Tape& t) {
        WindowForward fw = model.forward_window(t, window_view(tg, 0, 1));
        Var logits = node_logits(t, fw.embeddings.back(), nodes, head);
        return node_class_loss(t, logits, labels, {1.0, 2.0, 0.5});
      };
      for (Parameter* p : model.trainable()) {
        suite.check(std::string("gcn-xent/") + p->name, grad_check_param(loss_fn, *p, kEps));
      }
    }
  }

  return suite.results;
}

}  // namespace evogcn
