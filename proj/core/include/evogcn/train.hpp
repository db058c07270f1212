#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evogcn/heads.hpp"
#include "evogcn/metrics.hpp"
#include "evogcn/model.hpp"

namespace evogcn {

enum class TaskKind { link, edge_class, node_class };

TaskKind task_from_string(const std::string& s);
std::string to_string(TaskKind t);

struct TrainConfig {
  TaskKind task = TaskKind::link;
  int window = 10;
  double lr = 1e-3;
  int epochs = 200;
  int patience = 10;
  std::uint64_t seed = 1;
  int neg_ratio = 1;        // negatives per positive in the training loss
  int eval_neg_ratio = 100; // negatives per positive in ranking candidate pools
  std::vector<double> class_weights;  // node classification imbalance weights
  double clip_norm = 5.0;
  double target_train_loss = 0.0;  // stop once the epoch loss drops below (0 = off)

  void validate() const;
};

// Bias-corrected Adam over a fixed parameter list (beta1 0.9, beta2 0.999,
// eps 1e-8). Aborts with the offending parameter's name on non-finite input.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, double lr);

  void step();
  void zero_grad();
  // Scales all gradients so their global L2 norm is at most max_norm.
  void clip_global_norm(double max_norm);
  long step_count() const { return steps_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_;
  long steps_ = 0;
};

// Best-validation-epoch tracking with early stopping: the first epoch always
// becomes the incumbent; later epochs must strictly improve the metric.
class BestTracker {
 public:
  explicit BestTracker(int patience) : patience_(patience) {}
  bool update(int epoch, double metric);  // true if this epoch is the new best
  bool should_stop() const { return stale_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_metric_ = 0.0;
  int stale_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct StepMetric {
  int time_step = 0;
  double value = 0.0;
};

struct EvalSummary {
  // link task
  double map = 0.0;
  double mrr = 0.0;
  // classification tasks
  Prf micro;
  std::vector<Prf> per_class;
  double primary = 0.0;  // MAP for link, micro F1 for classification
  std::vector<StepMetric> per_step;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_metric = 0.0;
  EvalSummary test;
  double train_seconds = 0.0;
};

// Ranking evaluation of link prediction over steps [begin, end): predictions
// for edges at step t come from embeddings at t-1 (window of inputs ending
// there, allowed to span into earlier ranges); labels are read only from t.
EvalSummary evaluate_link(EvolveModel& model, MlpHead& head, const TemporalGraph& tg,
                          int begin, int end, const TrainConfig& cfg);

// Classification evaluation at each step t in [begin, end) from embeddings
// at t itself.
EvalSummary evaluate_classification(EvolveModel& model, MlpHead& head,
                                    const TemporalGraph& tg, int begin, int end,
                                    const TrainConfig& cfg);

EvalSummary evaluate(EvolveModel& model, MlpHead& head, const TemporalGraph& tg,
                     int begin, int end, const TrainConfig& cfg);

// Sliding-window training with Adam, validation-based model selection and
// early stopping. On return the model/head hold the best-epoch parameters.
// When out_dir is non-empty, writes epochs.jsonl, checkpoint.bin(+.manifest),
// test_metrics.csv, summary.json and timing.txt there.
TrainResult train(EvolveModel& model, MlpHead& head, const TemporalGraph& tg,
                  const SplitRanges& split, const TrainConfig& cfg,
                  const std::string& out_dir = "");

// The head an EvolveModel needs for a task (link/edge: pair head; node: node
// head with `classes` outputs).
MlpHead make_head(const ModelConfig& model_cfg, TaskKind task, int classes,
                  std::mt19937_64& rng);

void write_summary_json(const std::string& path, TaskKind task, const TrainResult& result);
void write_step_metrics_csv(const std::string& path, TaskKind task,
                            const std::vector<StepMetric>& steps);

}  // namespace evogcn
