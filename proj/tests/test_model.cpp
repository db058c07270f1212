#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "evogcn/errors.hpp"
#include "evogcn/heads.hpp"
#include "evogcn/model.hpp"
#include "evogcn/sbm.hpp"
#include "oracles.hpp"

using namespace evogcn;

namespace {

TemporalGraph small_sbm(int nodes, int steps, std::uint64_t seed, int cap = 6) {
  SbmConfig cfg;
  cfg.nodes = nodes;
  cfg.communities = 2;
  cfg.intra = 0.7;
  cfg.inter = 0.2;
  cfg.migrate_per_step = 1;
  cfg.steps = steps;
  cfg.seed = seed;
  cfg.feature_cap = cap;
  return generate_sbm(cfg);
}

ModelConfig small_model_config(Variant variant, const TemporalGraph& tg, int embedding = 4) {
  ModelConfig mc;
  mc.variant = variant;
  mc.feature_dim = tg.snapshots[0].features.cols();
  mc.embedding = embedding;
  mc.num_layers = 2;
  return mc;
}

long long total_params(std::vector<Parameter*> params) {
  long long n = 0;
  for (const Parameter* p : params) n += static_cast<long long>(p->value.size());
  return n;
}

}  // namespace

TEST_CASE("egcu_h with zero GRU parameters halves the previous weights") {
  std::mt19937_64 rng(5);
  MatrixGruParams gru("gru", 3, rng);
  SummarizeParams summ("summ", 3, rng);
  for (Parameter* p : gru.params()) p->value.set_zero();

  const auto graph = oracle::random_symmetric_graph(5, 0.5, rng);
  const SparseAdjacency a_hat = normalize_adjacency(graph);
  const Matrix h = Matrix::uniform(5, 3, 0.1, 1.0, rng);
  const Matrix w_prev = Matrix::uniform(3, 2, -1.0, 1.0, rng);

  Tape t;
  EgcuHResult r = egcu_h(t, a_hat, t.leaf(h), t.leaf(w_prev), gru, summ, Activation::relu);
  Matrix half = w_prev;
  half.scale_in_place(0.5);
  CHECK(max_abs_diff(t.value(r.weight), half) < 1e-15);

  // h_next = relu(A_hat h (w_prev / 2))
  const Matrix expected = matmul(spmm_value(a_hat, h), half);
  for (int i = 0; i < expected.rows(); ++i) {
    for (int j = 0; j < expected.cols(); ++j) {
      CHECK(t.value(r.h_next).at(i, j) ==
            doctest::Approx(std::max(expected.at(i, j), 0.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("egcu_h single-node all-dims-1 hand evaluation") {
  std::mt19937_64 rng(7);
  MatrixGruParams gru("gru", 1, rng);
  SummarizeParams summ("summ", 1, rng);
  SparseAdjacency single(1);
  single.finalize();
  const SparseAdjacency a_hat = normalize_adjacency(single);  // [[1]]

  const double h = 0.8, w_prev = 0.3;
  Tape t;
  EgcuHResult r = egcu_h(t, a_hat, t.leaf(Matrix::from_rows({{h}})),
                         t.leaf(Matrix::from_rows({{w_prev}})), gru, summ,
                         Activation::relu);

  // summarize: y = h * p/|p| = sign(p) * h; z = h * tanh(y)
  const double p = summ.p.value.scalar();
  const double y = h * (p / std::abs(p));
  const double x = h * std::tanh(y);
  const double z_gate = 1.0 / (1.0 + std::exp(-(gru.w_z.value.scalar() * x +
                                                gru.u_z.value.scalar() * w_prev +
                                                gru.b_z.value.scalar())));
  const double r_gate = 1.0 / (1.0 + std::exp(-(gru.w_r.value.scalar() * x +
                                                gru.u_r.value.scalar() * w_prev +
                                                gru.b_r.value.scalar())));
  const double h_tilde = std::tanh(gru.w_h.value.scalar() * x +
                                   gru.u_h.value.scalar() * (r_gate * w_prev) +
                                   gru.b_h.value.scalar());
  const double w_t = (1.0 - z_gate) * w_prev + z_gate * h_tilde;
  CHECK(t.value(r.weight).scalar() == doctest::Approx(w_t).epsilon(1e-12));
  CHECK(t.value(r.h_next).scalar() == doctest::Approx(std::max(h * w_t, 0.0)).epsilon(1e-12));
}

TEST_CASE("egcu_h gradient flows into the summarize vector") {
  std::mt19937_64 rng(9);
  MatrixGruParams gru("gru", 3, rng);
  SummarizeParams summ("summ", 3, rng);
  const auto graph = oracle::random_symmetric_graph(6, 0.5, rng);
  const SparseAdjacency a_hat = normalize_adjacency(graph);
  const Matrix h = Matrix::uniform(6, 3, 0.1, 1.0, rng);
  const Matrix w_prev = Matrix::uniform(3, 2, -1.0, 1.0, rng);

  const double err = grad_check_param(
      [&](Tape& t) {
        EgcuHResult r =
            egcu_h(t, a_hat, t.leaf(h), t.leaf(w_prev), gru, summ, Activation::tanh);
        return t.reduce(t.hadamard(r.h_next, r.h_next), Reduce::sum);
      },
      summ.p, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("egcu_o with zero LSTM parameters zeroes the weights") {
  std::mt19937_64 rng(11);
  MatrixLstmParams lstm("lstm", 3, rng);
  for (Parameter* p : lstm.params()) p->value.set_zero();
  const auto graph = oracle::random_symmetric_graph(5, 0.5, rng);
  const SparseAdjacency a_hat = normalize_adjacency(graph);
  const Matrix h = Matrix::uniform(5, 3, -1.0, 1.0, rng);

  Tape t;
  EgcuOResult r = egcu_o(t, a_hat, t.leaf(h), t.leaf(Matrix::uniform(3, 2, -1, 1, rng)),
                         t.leaf(Matrix(3, 2)), lstm, Activation::relu);
  CHECK(t.value(r.weight).max_abs() == 0.0);
  CHECK(t.value(r.h_next).max_abs() == 0.0);
}

TEST_CASE("egcu_o single-node all-dims-1 hand evaluation") {
  std::mt19937_64 rng(13);
  MatrixLstmParams lstm("lstm", 1, rng);
  SparseAdjacency single(1);
  single.finalize();
  const double h = -0.4, w_prev = 0.6, c_prev = 0.2;

  Tape t;
  EgcuOResult r = egcu_o(t, normalize_adjacency(single), t.leaf(Matrix::from_rows({{h}})),
                         t.leaf(Matrix::from_rows({{w_prev}})),
                         t.leaf(Matrix::from_rows({{c_prev}})), lstm, Activation::identity);

  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double f = sig(lstm.w_f.value.scalar() * w_prev + lstm.u_f.value.scalar() * w_prev +
                       lstm.b_f.value.scalar());
  const double i = sig(lstm.w_i.value.scalar() * w_prev + lstm.u_i.value.scalar() * w_prev +
                       lstm.b_i.value.scalar());
  const double o = sig(lstm.w_o.value.scalar() * w_prev + lstm.u_o.value.scalar() * w_prev +
                       lstm.b_o.value.scalar());
  const double c_tilde = std::tanh(lstm.w_c.value.scalar() * w_prev +
                                   lstm.u_c.value.scalar() * w_prev +
                                   lstm.b_c.value.scalar());
  const double c = f * c_prev + i * c_tilde;
  const double w_t = o * std::tanh(c);
  CHECK(t.value(r.weight).scalar() == doctest::Approx(w_t).epsilon(1e-12));
  CHECK(t.value(r.cell).scalar() == doctest::Approx(c).epsilon(1e-12));
  CHECK(t.value(r.h_next).scalar() == doctest::Approx(h * w_t).epsilon(1e-12));
}

TEST_CASE("variant O weights never depend on node features") {
  const TemporalGraph tg = small_sbm(8, 3, 21);
  std::mt19937_64 rng(22);
  EvolveModel model(small_model_config(Variant::o, tg), rng);

  Tape t1;
  WindowForward a = model.forward_window(t1, window_view(tg, 0, 3));

  TemporalGraph perturbed = tg;
  for (GraphSnapshot& snap : perturbed.snapshots) {
    for (int i = 0; i < snap.features.rows(); ++i) {
      for (int j = 0; j < snap.features.cols(); ++j) snap.features.at(i, j) += 0.37;
    }
  }
  Tape t2;
  WindowForward b = model.forward_window(t2, window_view(perturbed, 0, 3));

  for (int step = 0; step < 3; ++step) {
    for (std::size_t layer = 0; layer < a.weights[step].size(); ++layer) {
      CHECK(max_abs_diff(t1.value(a.weights[step][layer]),
                         t2.value(b.weights[step][layer])) == 0.0);  // bit-identical
    }
    // embeddings do change
    CHECK(max_abs_diff(t1.value(a.embeddings[step]), t2.value(b.embeddings[step])) > 0.0);
  }
}

TEST_CASE("variant H weights do react to node features") {
  const TemporalGraph tg = small_sbm(8, 2, 23);
  std::mt19937_64 rng(24);
  EvolveModel model(small_model_config(Variant::h, tg), rng);

  Tape t1;
  WindowForward a = model.forward_window(t1, window_view(tg, 0, 2));

  TemporalGraph perturbed = tg;
  for (int i = 0; i < perturbed.snapshots[0].features.rows(); ++i) {
    perturbed.snapshots[0].features.at(i, 0) += 0.25;
  }
  Tape t2;
  WindowForward b = model.forward_window(t2, window_view(perturbed, 0, 2));
  CHECK(max_abs_diff(t1.value(a.weights[0][0]), t2.value(b.weights[0][0])) > 0.0);
}

TEST_CASE("forward_window with one step equals a once-evolved GCN") {
  const TemporalGraph tg = small_sbm(8, 1, 25);
  std::mt19937_64 rng(26);
  EvolveModel model(small_model_config(Variant::h, tg), rng);
  Tape t;
  WindowForward fw = model.forward_window(t, window_view(tg, 0, 1));
  CHECK(fw.embeddings.size() == 1);
  CHECK(t.value(fw.embeddings[0]).rows() == 8);
  CHECK(t.value(fw.embeddings[0]).cols() == 4);
  CHECK(t.value(fw.embeddings[0]).all_finite());
}

TEST_CASE("static GCN uses the same weights at every step") {
  const TemporalGraph tg = small_sbm(8, 4, 27);
  std::mt19937_64 rng(28);
  EvolveModel model(small_model_config(Variant::static_gcn, tg), rng);
  Tape t;
  WindowForward fw = model.forward_window(t, window_view(tg, 0, 4));
  for (int step = 1; step < 4; ++step) {
    for (std::size_t l = 0; l < fw.weights[step].size(); ++l) {
      CHECK(fw.weights[step][l].id == fw.weights[0][l].id);
    }
  }
}

TEST_CASE("gcn-gru trains its recurrent cell (nonzero gradient)") {
  const TemporalGraph tg = small_sbm(8, 3, 29);
  std::mt19937_64 rng(30);
  EvolveModel model(small_model_config(Variant::gcn_gru, tg), rng);

  model.zero_grad();
  Tape t;
  WindowForward fw = model.forward_window(t, window_view(tg, 0, 3));
  Var loss = t.reduce(t.hadamard(fw.embeddings.back(), fw.embeddings.back()), Reduce::sum);
  t.backward(loss);

  double gru_grad = 0.0;
  for (Parameter* p : model.trainable()) {
    if (p->name.rfind("node_gru", 0) == 0) gru_grad += p->grad.max_abs();
  }
  CHECK(gru_grad > 0.0);

  // embeddings at step t see history: perturbing step 0 changes step 2
  TemporalGraph perturbed = tg;
  perturbed.snapshots[0].features.at(0, 0) += 1.0;
  Tape t2;
  WindowForward fw2 = model.forward_window(t2, window_view(perturbed, 0, 3));
  CHECK(max_abs_diff(t.value(fw.embeddings[2]), t2.value(fw2.embeddings[2])) > 0.0);
}

TEST_CASE("trainable parameter count is independent of the window length") {
  const TemporalGraph tg = small_sbm(10, 10, 31);
  for (Variant variant : {Variant::h, Variant::o}) {
    std::mt19937_64 rng(32);
    EvolveModel model(small_model_config(variant, tg), rng);
    const long long before = total_params(model.trainable());

    Tape t1;
    model.forward_window(t1, window_view(tg, 0, 1));
    const long long after_short = total_params(model.trainable());

    Tape t2;
    model.forward_window(t2, window_view(tg, 0, 10));
    const long long after_long = total_params(model.trainable());

    CHECK(before == after_short);
    CHECK(after_short == after_long);
  }
}

TEST_CASE("node sets may change across steps without breaking variant H") {
  // 30% of nodes swap in/out between consecutive steps
  std::mt19937_64 rng(33);
  TemporalGraph tg;
  const int n = 20;
  tg.num_nodes = n;
  std::vector<int> active{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  for (int t = 0; t < 5; ++t) {
    if (t > 0) {
      for (int swaps = 0; swaps < 4; ++swaps) {
        const int out = static_cast<int>(rng() % active.size());
        int candidate = static_cast<int>(rng() % n);
        while (std::find(active.begin(), active.end(), candidate) != active.end()) {
          candidate = (candidate + 1) % n;
        }
        active[out] = candidate;
      }
    }
    std::sort(active.begin(), active.end());
    GraphSnapshot snap;
    snap.time_index = t;
    snap.adjacency = SparseAdjacency(n);
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        if (rng() % 3 == 0) {
          snap.adjacency.add_edge(active[i], active[j], 1.0);
          snap.adjacency.add_edge(active[j], active[i], 1.0);
        }
      }
    }
    snap.adjacency.finalize();
    snap.features = degree_onehot_features(snap.adjacency, 6);
    snap.active_nodes = active;
    tg.snapshots.push_back(std::move(snap));
  }

  std::mt19937_64 model_rng(34);
  EvolveModel model(small_model_config(Variant::h, tg), model_rng);
  Tape t;
  WindowForward fw = model.forward_window(t, window_view(tg, 0, 5));
  for (const Var& emb : fw.embeddings) CHECK(t.value(emb).all_finite());
}

TEST_CASE("forward is deterministic under a fixed seed") {
  const TemporalGraph tg = small_sbm(8, 3, 35);
  auto run = [&tg]() {
    std::mt19937_64 rng(36);
    EvolveModel model(small_model_config(Variant::h, tg), rng);
    Tape t;
    WindowForward fw = model.forward_window(t, window_view(tg, 0, 3));
    return t.value(fw.embeddings.back());
  };
  CHECK(max_abs_diff(run(), run()) == 0.0);
}

TEST_CASE("empty window is rejected") {
  const TemporalGraph tg = small_sbm(6, 2, 37);
  std::mt19937_64 rng(38);
  EvolveModel model(small_model_config(Variant::h, tg), rng);
  Tape t;
  std::vector<const GraphSnapshot*> empty;
  CHECK_THROWS_AS(model.forward_window(t, empty), ArgumentError);
  CHECK_THROWS_AS(window_view(tg, 0, 0), ArgumentError);
  CHECK_THROWS_AS(window_view(tg, 1, 5), ArgumentError);
}

TEST_CASE("checkpoint round-trips parameters by name") {
  const TemporalGraph tg = small_sbm(8, 2, 39);
  std::mt19937_64 rng(40);
  EvolveModel model(small_model_config(Variant::o, tg), rng);
  MlpHead head("head", 8, 1, rng);

  std::vector<Parameter*> params = model.trainable();
  for (Parameter* p : head.params()) params.push_back(p);

  const auto dir = std::filesystem::temp_directory_path() / "evogcn_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "checkpoint.bin").string();
  save_checkpoint(path, params);

  std::mt19937_64 rng2(999);  // different init, then overwritten by the load
  EvolveModel restored(small_model_config(Variant::o, tg), rng2);
  MlpHead restored_head("head", 8, 1, rng2);
  std::vector<Parameter*> restored_params = restored.trainable();
  for (Parameter* p : restored_head.params()) restored_params.push_back(p);
  load_checkpoint(path, restored_params);

  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(max_abs_diff(params[i]->value, restored_params[i]->value) == 0.0);
  }

  // manifest sanity: name rows cols offset per line
  std::ifstream manifest(path + ".manifest");
  std::string header;
  std::getline(manifest, header);
  CHECK(header == "evogcn-checkpoint 1");

  // shape mismatch is rejected
  std::mt19937_64 rng3(41);
  MlpHead wrong("head", 10, 1, rng3);
  std::vector<Parameter*> wrong_params{&wrong.weight};
  CHECK_THROWS_AS(load_checkpoint(path, wrong_params), DataError);
}
