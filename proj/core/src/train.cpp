#include "evogcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "evogcn/errors.hpp"

namespace evogcn {

TaskKind task_from_string(const std::string& s) {
  if (s == "link") return TaskKind::link;
  if (s == "edge") return TaskKind::edge_class;
  if (s == "node") return TaskKind::node_class;
  throw ConfigError("unknown task '" + s + "' (expected link, edge or node)");
}

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::link: return "link";
    case TaskKind::edge_class: return "edge";
    case TaskKind::node_class: return "node";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (window < 1) throw ConfigError("train: window must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (lr < 0.0) throw ConfigError("train: learning rate must be >= 0");
  if (neg_ratio < 1) throw ConfigError("train: neg_ratio must be >= 1");
  if (eval_neg_ratio < 1) throw ConfigError("train: eval_neg_ratio must be >= 1");
  if (clip_norm <= 0.0) throw ConfigError("train: clip_norm must be > 0");
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, double lr)
    : params_(std::move(params)), lr_(lr) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamOptimizer::step() {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
    for (int r = 0; r < p.value.rows(); ++r) {
      for (int c = 0; c < p.value.cols(); ++c) {
        const double g = p.grad.at(r, c);
        double& m = m_[i].at(r, c);
        double& v = v_[i].at(r, c);
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        p.value.at(r, c) -= lr_ * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void AdamOptimizer::clip_global_norm(double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params_) {
    for (int r = 0; r < p->grad.rows(); ++r) {
      for (int c = 0; c < p->grad.cols(); ++c) {
        const double g = p->grad.at(r, c);
        sq += g * g;
      }
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Parameter* p : params_) p->grad.scale_in_place(scale);
  }
}

bool BestTracker::update(int epoch, double metric) {
  if (best_epoch_ < 0 || metric > best_metric_) {
    best_epoch_ = epoch;
    best_metric_ = metric;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

namespace {

std::uint64_t eval_pool_seed(std::uint64_t seed, int step) {
  return seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(step + 1));
}

// directed raw edges excluding self-pairs
std::vector<std::pair<int, int>> positives_at(const GraphSnapshot& snap) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [u, v] : snap.edges()) {
    if (u != v) out.emplace_back(u, v);
  }
  return out;
}

int argmax_class(const Matrix& logits, int col) {
  int best = 0;
  double best_v = logits.at(0, col);
  for (int c = 1; c < logits.rows(); ++c) {
    if (logits.at(c, col) > best_v) {
      best_v = logits.at(c, col);
      best = c;
    }
  }
  return best;
}

// value-level class logits for pairs/nodes (evaluation path, no tape)
Matrix pair_logits_value(const Matrix& emb, const std::vector<std::pair<int, int>>& pairs,
                         const MlpHead& head) {
  const int d = emb.cols();
  Matrix logits(head.classes(), static_cast<int>(pairs.size()));
  for (int s = 0; s < logits.cols(); ++s) {
    const auto& [u, v] = pairs[s];
    for (int c = 0; c < head.classes(); ++c) {
      double z = head.bias.value.at(c, 0);
      for (int j = 0; j < d; ++j) {
        z += head.weight.value.at(c, j) * emb.at(u, j);
        z += head.weight.value.at(c, d + j) * emb.at(v, j);
      }
      logits.at(c, s) = z;
    }
  }
  return logits;
}

Matrix node_logits_value(const Matrix& emb, const std::vector<int>& nodes,
                         const MlpHead& head) {
  const int d = emb.cols();
  Matrix logits(head.classes(), static_cast<int>(nodes.size()));
  for (int s = 0; s < logits.cols(); ++s) {
    for (int c = 0; c < head.classes(); ++c) {
      double z = head.bias.value.at(c, 0);
      for (int j = 0; j < d; ++j) z += head.weight.value.at(c, j) * emb.at(nodes[s], j);
      logits.at(c, s) = z;
    }
  }
  return logits;
}

struct WindowLoss {
  Var loss;       // invalid when the window has no labeled targets
  int terms = 0;  // prediction steps contributing
};

WindowLoss window_training_loss(Tape& tape, EvolveModel& model, MlpHead& head,
                                const TemporalGraph& tg, int begin, int end,
                                int label_end, const TrainConfig& cfg,
                                std::mt19937_64& rng) {
  WindowForward fw = model.forward_window(tape, window_view(tg, begin, end));
  WindowLoss out;
  for (int i = 0; i < end - begin; ++i) {
    const int t = begin + i;
    Var step_loss;
    switch (cfg.task) {
      case TaskKind::link: {
        const int target = t + 1;
        if (target >= label_end) break;
        const GraphSnapshot& next = tg.snapshots[target];
        const auto positives = positives_at(next);
        if (positives.empty()) continue;
        const auto negatives = sample_negatives(next, positives, cfg.neg_ratio, rng);
        std::vector<std::pair<int, int>> pairs = positives;
        std::vector<int> labels(positives.size(), 1);
        for (const EdgeSample& s : negatives) {
          pairs.emplace_back(s.source, s.target);
          labels.push_back(0);
        }
        Var logits = edge_pair_logits(tape, fw.embeddings[i], pairs, head);
        step_loss = link_loss(tape, logits, labels);
        break;
      }
      case TaskKind::edge_class: {
        const GraphSnapshot& snap = tg.snapshots[t];
        if (snap.edge_labels.empty()) continue;
        std::vector<std::pair<int, int>> pairs;
        std::vector<int> labels;
        for (const auto& [edge, label] : snap.edge_labels) {
          pairs.push_back(edge);
          labels.push_back(label);
        }
        Var logits = edge_pair_logits(tape, fw.embeddings[i], pairs, head);
        step_loss = edge_class_loss(tape, logits, labels);
        break;
      }
      case TaskKind::node_class: {
        const GraphSnapshot& snap = tg.snapshots[t];
        if (snap.node_labels.empty()) continue;
        std::vector<int> nodes;
        std::vector<int> labels;
        for (const auto& [node, label] : snap.node_labels) {
          nodes.push_back(node);
          labels.push_back(label);
        }
        Var logits = node_logits(tape, fw.embeddings[i], nodes, head);
        step_loss = node_class_loss(tape, logits, labels, cfg.class_weights);
        break;
      }
    }
    if (!step_loss.valid()) continue;
    out.loss = out.loss.valid() ? tape.add(out.loss, step_loss) : step_loss;
    ++out.terms;
  }
  return out;
}

}  // namespace

EvalSummary evaluate_link(EvolveModel& model, MlpHead& head, const TemporalGraph& tg,
                          int begin, int end, const TrainConfig& cfg) {
  std::vector<RankedQuery> all_queries;
  EvalSummary summary;

  for (int tau = std::max(begin, 1); tau < end; ++tau) {
    const GraphSnapshot& snap = tg.snapshots[tau];
    const auto positives = positives_at(snap);
    if (positives.empty()) continue;

    Tape tape;
    const int wb = std::max(0, tau - cfg.window);
    WindowForward fw = model.forward_window(tape, window_view(tg, wb, tau));
    const Matrix& emb = tape.value(fw.embeddings.back());

    std::mt19937_64 pool_rng(eval_pool_seed(cfg.seed, tau));
    const auto negatives = sample_negatives(snap, positives, cfg.eval_neg_ratio, pool_rng);

    std::map<int, std::map<int, bool>> pools;  // source -> candidate -> relevant
    for (const auto& [u, v] : positives) pools[u][v] = true;
    for (const EdgeSample& s : negatives) pools[s.source].try_emplace(s.target, false);

    std::vector<RankedQuery> step_queries;
    for (const auto& [source, candidates] : pools) {
      RankedQuery q;
      for (const auto& [target, relevant] : candidates) {
        q.candidate_ids.push_back(target);
        q.scores.push_back(link_score(emb, source, target, head));
        q.relevant.push_back(relevant ? 1 : 0);
      }
      step_queries.push_back(std::move(q));
    }
    summary.per_step.push_back({tau, mean_average_precision(step_queries)});
    for (RankedQuery& q : step_queries) all_queries.push_back(std::move(q));
  }

  if (!all_queries.empty()) {
    summary.map = mean_average_precision(all_queries);
    summary.mrr = mrr(all_queries);
  }
  summary.primary = summary.map;
  return summary;
}

EvalSummary evaluate_classification(EvolveModel& model, MlpHead& head,
                                    const TemporalGraph& tg, int begin, int end,
                                    const TrainConfig& cfg) {
  std::vector<int> all_predictions, all_labels;
  EvalSummary summary;

  for (int tau = begin; tau < end; ++tau) {
    const GraphSnapshot& snap = tg.snapshots[tau];
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> nodes;
    std::vector<int> labels;
    if (cfg.task == TaskKind::edge_class) {
      for (const auto& [edge, label] : snap.edge_labels) {
        pairs.push_back(edge);
        labels.push_back(label);
      }
    } else {
      for (const auto& [node, label] : snap.node_labels) {
        nodes.push_back(node);
        labels.push_back(label);
      }
    }
    if (labels.empty()) continue;

    Tape tape;
    const int wb = std::max(0, tau - cfg.window + 1);
    WindowForward fw = model.forward_window(tape, window_view(tg, wb, tau + 1));
    const Matrix& emb = tape.value(fw.embeddings.back());

    const Matrix logits = cfg.task == TaskKind::edge_class
                              ? pair_logits_value(emb, pairs, head)
                              : node_logits_value(emb, nodes, head);
    std::vector<int> predictions;
    predictions.reserve(labels.size());
    for (int s = 0; s < logits.cols(); ++s) predictions.push_back(argmax_class(logits, s));

    const PrfReport step_report = prf1(predictions, labels, head.classes());
    summary.per_step.push_back({tau, step_report.micro.f1});
    all_predictions.insert(all_predictions.end(), predictions.begin(), predictions.end());
    all_labels.insert(all_labels.end(), labels.begin(), labels.end());
  }

  if (!all_predictions.empty()) {
    const PrfReport report = prf1(all_predictions, all_labels, head.classes());
    summary.micro = report.micro;
    summary.per_class = report.per_class;
  }
  summary.primary = summary.micro.f1;
  return summary;
}

EvalSummary evaluate(EvolveModel& model, MlpHead& head, const TemporalGraph& tg,
                     int begin, int end, const TrainConfig& cfg) {
  return cfg.task == TaskKind::link
             ? evaluate_link(model, head, tg, begin, end, cfg)
             : evaluate_classification(model, head, tg, begin, end, cfg);
}

MlpHead make_head(const ModelConfig& model_cfg, TaskKind task, int classes,
                  std::mt19937_64& rng) {
  switch (task) {
    case TaskKind::link:
      return MlpHead("head", 2 * model_cfg.embedding, 1, rng);
    case TaskKind::edge_class:
      return MlpHead("head", 2 * model_cfg.embedding, classes, rng);
    case TaskKind::node_class:
      return MlpHead("head", model_cfg.embedding, classes, rng);
  }
  throw ConfigError("unhandled task kind");
}

TrainResult train(EvolveModel& model, MlpHead& head, const TemporalGraph& tg,
                  const SplitRanges& split, const TrainConfig& cfg,
                  const std::string& out_dir) {
  cfg.validate();
  const int train_steps = split.train_end - split.train_begin;
  if (train_steps < 1) throw ConfigError("train: empty training range");
  if (split.val_end <= split.val_begin) {
    throw ConfigError("train: validation range is empty; model selection needs one");
  }

  std::vector<Parameter*> params = model.trainable();
  for (Parameter* p : head.params()) params.push_back(p);

  AdamOptimizer optimizer(params, cfg.lr);
  BestTracker tracker(cfg.patience);
  std::mt19937_64 train_rng(cfg.seed);

  const int window = std::min(cfg.window, train_steps);
  std::vector<Matrix> best_values;
  TrainResult result;

  const auto start = std::chrono::steady_clock::now();
  std::vector<double> epoch_seconds;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    int windows_used = 0;

    for (int s = split.train_begin; s + window <= split.train_end; ++s) {
      Tape tape;
      WindowLoss wl = window_training_loss(tape, model, head, tg, s, s + window,
                                           split.train_end, cfg, train_rng);
      if (!wl.loss.valid()) continue;
      const double loss_value = tape.value(wl.loss).scalar();
      if (!std::isfinite(loss_value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", window starting at step " + std::to_string(s));
      }
      tape.backward(wl.loss);
      optimizer.clip_global_norm(cfg.clip_norm);
      optimizer.step();
      optimizer.zero_grad();
      loss_sum += loss_value;
      ++windows_used;
    }
    if (windows_used == 0) {
      throw ConfigError("training range produces no labeled prediction targets");
    }
    const double train_loss = loss_sum / windows_used;

    const EvalSummary val = evaluate(model, head, tg, split.val_begin, split.val_end, cfg);
    result.epochs.push_back({epoch, train_loss, val.primary});

    if (tracker.update(epoch, val.primary)) {
      best_values.clear();
      for (const Parameter* p : params) best_values.push_back(p->value);
    }

    epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
            .count());

    if (cfg.target_train_loss > 0.0 && train_loss < cfg.target_train_loss) break;
    if (tracker.should_stop()) break;
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  result.best_epoch = tracker.best_epoch();
  result.best_val_metric = tracker.best_metric();

  if (split.test_end > split.test_begin) {
    result.test = evaluate(model, head, tg, split.test_begin, split.test_end, cfg);
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);

    std::ofstream epochs_out(out_dir + "/epochs.jsonl");
    if (!epochs_out) throw DataError("cannot write " + out_dir + "/epochs.jsonl");
    for (const EpochRecord& r : result.epochs) {
      nlohmann::json record;
      record["epoch"] = r.epoch;
      record["train_loss"] = r.train_loss;
      record["val_metric"] = r.val_metric;
      epochs_out << record.dump() << '\n';
    }

    save_checkpoint(out_dir + "/checkpoint.bin", params);
    write_step_metrics_csv(out_dir + "/test_metrics.csv", cfg.task, result.test.per_step);
    write_summary_json(out_dir + "/summary.json", cfg.task, result);

    // wall-clock timings live outside the deterministic artifacts
    std::ofstream timing(out_dir + "/timing.txt");
    timing << "total_seconds " << result.train_seconds << '\n';
    for (std::size_t i = 0; i < epoch_seconds.size(); ++i) {
      timing << "epoch " << (i + 1) << ' ' << epoch_seconds[i] << '\n';
    }
  }
  return result;
}

void write_step_metrics_csv(const std::string& path, TaskKind task,
                            const std::vector<StepMetric>& steps) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "time_step," << (task == TaskKind::link ? "map" : "f1") << '\n';
  out.precision(17);
  for (const StepMetric& s : steps) out << s.time_step << ',' << s.value << '\n';
}

void write_summary_json(const std::string& path, TaskKind task, const TrainResult& result) {
  nlohmann::json j;
  j["task"] = to_string(task);
  j["best_epoch"] = result.best_epoch;
  j["best_val_metric"] = result.best_val_metric;
  j["epochs_run"] = result.epochs.size();
  if (task == TaskKind::link) {
    j["test"]["map"] = result.test.map;
    j["test"]["mrr"] = result.test.mrr;
  } else {
    j["test"]["precision"] = result.test.micro.precision;
    j["test"]["recall"] = result.test.micro.recall;
    j["test"]["f1"] = result.test.micro.f1;
    nlohmann::json per_class = nlohmann::json::array();
    for (const Prf& c : result.test.per_class) {
      per_class.push_back({{"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1}});
    }
    j["test"]["per_class"] = per_class;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace evogcn
