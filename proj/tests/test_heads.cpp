#include <cmath>
#include <random>
#include <set>

#include <doctest.h>

#include "evogcn/errors.hpp"
#include "evogcn/heads.hpp"
#include "evogcn/model.hpp"
#include "evogcn/sbm.hpp"

using namespace evogcn;

namespace {

GraphSnapshot snapshot_with_edges(int n, std::initializer_list<std::pair<int, int>> edges) {
  GraphSnapshot snap;
  snap.adjacency = SparseAdjacency(n);
  for (const auto& [u, v] : edges) snap.adjacency.add_edge(u, v, 1.0);
  snap.adjacency.finalize();
  snap.features = degree_onehot_features(snap.adjacency, 4);
  snap.active_nodes.resize(n);
  for (int i = 0; i < n; ++i) snap.active_nodes[i] = i;
  return snap;
}

}  // namespace

TEST_CASE("zero head parameters score one half for every pair") {
  std::mt19937_64 rng(1);
  MlpHead head("head", 4, 1, rng);
  head.weight.value.set_zero();
  head.bias.value.set_zero();
  const Matrix emb = Matrix::uniform(5, 2, -1.0, 1.0, rng);
  for (int u = 0; u < 5; ++u) {
    for (int v = 0; v < 5; ++v) {
      CHECK(link_score(emb, u, v, head) == 0.5);
    }
  }
}

TEST_CASE("hand-set one-dimensional head reproduces sigmoid(h_u + h_v)") {
  std::mt19937_64 rng(2);
  MlpHead head("head", 2, 1, rng);
  head.weight.value = Matrix::from_rows({{1.0, 1.0}});
  head.bias.value.set_zero();
  const Matrix emb = Matrix::from_rows({{0.3}, {-1.2}, {0.9}});
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) {
      const double expected = 1.0 / (1.0 + std::exp(-(emb.at(u, 0) + emb.at(v, 0))));
      CHECK(link_score(emb, u, v, head) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("asymmetric head weights make the score order-dependent") {
  std::mt19937_64 rng(3);
  MlpHead head("head", 2, 1, rng);
  head.weight.value = Matrix::from_rows({{2.0, -1.0}});  // source and target differ
  head.bias.value.set_zero();
  const Matrix emb = Matrix::from_rows({{1.0}, {0.2}});
  CHECK(link_score(emb, 0, 1, head) != link_score(emb, 1, 0, head));
}

TEST_CASE("edge_pair_logits matches link_score through the tape") {
  std::mt19937_64 rng(4);
  MlpHead head("head", 6, 1, rng);
  const Matrix emb = Matrix::uniform(4, 3, -1.0, 1.0, rng);
  const std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}, {3, 0}};
  Tape t;
  Var logits = edge_pair_logits(t, t.leaf(emb), pairs, head);
  CHECK(t.value(logits).rows() == 1);
  CHECK(t.value(logits).cols() == 3);
  for (int s = 0; s < 3; ++s) {
    const double sig = 1.0 / (1.0 + std::exp(-t.value(logits).at(0, s)));
    CHECK(sig == doctest::Approx(link_score(emb, pairs[s].first, pairs[s].second, head))
                     .epsilon(1e-12));
  }
}

TEST_CASE("sampling a complete graph fails with a sampling error") {
  GraphSnapshot complete = snapshot_with_edges(
      3, {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}});
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(sample_negatives(complete, {{0, 1}}, 1, rng), SamplingError);
}

TEST_CASE("three-node graph: negatives come from the two non-edges only") {
  // undirected positive (0,1) listed in both directions
  GraphSnapshot snap = snapshot_with_edges(3, {{0, 1}, {1, 0}});
  const std::vector<std::pair<int, int>> positives{{0, 1}, {1, 0}};

  std::set<std::pair<int, int>> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    for (const EdgeSample& s : sample_negatives(snap, positives, 1, rng)) {
      CHECK(s.label == 0);
      CHECK(s.source != s.target);
      CHECK(!snap.adjacency.has_edge(s.source, s.target));
      seen.insert({s.source, s.target});
    }
  }
  const std::set<std::pair<int, int>> expected{{0, 2}, {1, 2}};
  CHECK(seen == expected);
}

TEST_CASE("negative sampling is deterministic under a fixed seed") {
  const TemporalGraph tg = [&] {
    SbmConfig cfg;
    cfg.nodes = 30;
    cfg.steps = 1;
    cfg.seed = 7;
    cfg.feature_cap = 5;
    return generate_sbm(cfg);
  }();
  const GraphSnapshot& snap = tg.snapshots[0];
  std::vector<std::pair<int, int>> positives = snap.edges();

  auto draw = [&]() {
    std::mt19937_64 rng(99);
    std::vector<std::pair<int, int>> out;
    for (const EdgeSample& s : sample_negatives(snap, positives, 2, rng)) {
      out.emplace_back(s.source, s.target);
    }
    return out;
  };
  CHECK(draw() == draw());
}

TEST_CASE("negatives are always disjoint from the positive edge set") {
  const TemporalGraph tg = [&] {
    SbmConfig cfg;
    cfg.nodes = 40;
    cfg.intra = 0.4;
    cfg.inter = 0.15;
    cfg.steps = 3;
    cfg.seed = 11;
    cfg.feature_cap = 5;
    return generate_sbm(cfg);
  }();
  std::mt19937_64 rng(12);
  for (const GraphSnapshot& snap : tg.snapshots) {
    const auto positives = snap.edges();
    for (const EdgeSample& s : sample_negatives(snap, positives, 3, rng)) {
      CHECK(!snap.adjacency.has_edge(s.source, s.target));
    }
  }
}

TEST_CASE("link loss anchors") {
  Tape t;
  Var logits = t.leaf(Matrix(1, 4));  // sigmoid(0) = 0.5 everywhere
  const std::vector<int> labels{1, 0, 1, 0};
  CHECK(t.value(link_loss(t, logits, labels)).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Var confident = t.leaf(Matrix::from_rows({{40.0, -40.0, 35.0, -50.0}}));
  CHECK(t.value(link_loss(t, confident, labels)).scalar() < 1e-6);

  CHECK_THROWS_AS(link_loss(t, logits, {}), ArgumentError);
}

TEST_CASE("class weights scale a minority example's loss linearly") {
  Tape t;
  const Matrix logits_val = Matrix::from_rows({{0.4, -0.3}, {-1.0, 0.7}});  // 2 classes x 2
  const std::vector<int> labels{0, 1};

  auto weighted = [&](double w) {
    Tape tape;
    Var logits = tape.leaf(logits_val);
    return tape.value(node_class_loss(tape, logits, labels, {1.0, w})).scalar();
  };
  const double base = weighted(1.0);

  // sample 1 (class 1) has weight w; its contribution must scale linearly
  Tape tape;
  Var logits = tape.leaf(logits_val);
  const double class0_only =
      tape.value(node_class_loss(tape, logits, labels, {1.0, 0.0})).scalar();
  const double with_two = weighted(2.0);
  const double with_five = weighted(5.0);
  const double minority_at_1 = base - class0_only;
  CHECK(with_two == doctest::Approx(class0_only + 2.0 * minority_at_1).epsilon(1e-12));
  CHECK(with_five == doctest::Approx(class0_only + 5.0 * minority_at_1).epsilon(1e-12));
}

TEST_CASE("end-to-end gradient reaches the evolution parameters") {
  SbmConfig cfg;
  cfg.nodes = 10;
  cfg.steps = 3;
  cfg.migrate_per_step = 2;
  cfg.seed = 13;
  cfg.feature_cap = 5;
  const TemporalGraph tg = generate_sbm(cfg);

  for (Variant variant : {Variant::h, Variant::o}) {
    std::mt19937_64 rng(14);
    ModelConfig mc;
    mc.variant = variant;
    mc.feature_dim = tg.snapshots[0].features.cols();
    mc.embedding = 4;
    mc.num_layers = 2;
    EvolveModel model(mc, rng);
    MlpHead head("head", 2 * mc.embedding, 1, rng);

    model.zero_grad();
    Tape t;
    WindowForward fw = model.forward_window(t, window_view(tg, 0, 3));
    const auto positives = tg.snapshots[2].edges();
    std::vector<std::pair<int, int>> pairs(positives.begin(), positives.begin() + 8);
    const std::vector<int> labels{1, 1, 1, 1, 0, 0, 0, 0};
    t.backward(link_loss(t, edge_pair_logits(t, fw.embeddings[1], pairs, head), labels));

    double evolution_grad = 0.0;
    for (Parameter* p : model.trainable()) {
      const bool is_cell = p->name.find(".gru.") != std::string::npos ||
                           p->name.find(".lstm.") != std::string::npos ||
                           p->name.find(".summarize.") != std::string::npos;
      if (is_cell) evolution_grad += p->grad.max_abs();
    }
    CHECK(evolution_grad > 0.0);
  }
}
