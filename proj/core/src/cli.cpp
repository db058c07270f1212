#include "evogcn/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "evogcn/config.hpp"
#include "evogcn/errors.hpp"
#include "evogcn/gradcheck_suite.hpp"
#include "evogcn/ingest.hpp"
#include "evogcn/sbm.hpp"
#include "evogcn/train.hpp"

namespace evogcn {

namespace {

void print_usage(std::ostream& os) {
  os << "usage: evogcn <command> [--config FILE] [--<key> <value>]...\n"
     << "\n"
     << "commands:\n"
     << "  generate-sbm   write a synthetic dynamic-community dataset\n"
     << "  ingest         bucket a timestamped edge list into a snapshot cache\n"
     << "  train          train a model and write run artifacts\n"
     << "  evaluate       recompute test metrics from a saved checkpoint\n"
     << "  gradcheck      verify every differentiated operation against\n"
     << "                 central differences\n"
     << "\n"
     << "configuration keys (defaults in parentheses):\n";
  const RunConfig defaults = RunConfig::defaults();
  for (const auto& [key, doc] : RunConfig::descriptions()) {
    os << "  " << key << " (" << defaults.str(key) << "): " << doc << "\n";
  }
}

RunConfig parse_args(int argc, const char* const* argv, int first) {
  RunConfig cfg = RunConfig::defaults();
  for (int i = first; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--", 0) != 0) {
      throw ConfigError("expected --key, got '" + arg + "'");
    }
    arg = arg.substr(2);
    if (i + 1 >= argc) throw ConfigError("missing value for --" + arg);
    const std::string value = argv[++i];
    if (arg == "config") {
      cfg.load_file(value);
    } else {
      cfg.set(arg, value);
    }
  }
  return cfg;
}

SbmConfig sbm_config(const RunConfig& cfg) {
  SbmConfig sc;
  sc.nodes = static_cast<int>(cfg.integer("sbm.nodes"));
  sc.communities = static_cast<int>(cfg.integer("sbm.communities"));
  sc.intra = cfg.real("sbm.intra");
  sc.inter = cfg.real("sbm.inter");
  sc.migrate_per_step = static_cast<int>(cfg.integer("sbm.migrate"));
  sc.steps = static_cast<int>(cfg.integer("sbm.steps"));
  sc.seed = cfg.u64("seed");
  sc.feature_cap = static_cast<int>(cfg.integer("data.feature_cap"));
  return sc;
}

TemporalGraph load_dataset(const RunConfig& cfg, IngestStats* stats = nullptr) {
  const std::string cache = cfg.str("data.cache");
  if (!cache.empty() && std::filesystem::exists(cache)) {
    return load_snapshot_cache(cache);
  }
  const std::string path = cfg.str("data.path");
  if (path.empty()) {
    throw ConfigError("set data.path (edge list) or data.cache (snapshot cache)");
  }
  IngestConfig ic;
  ic.path = path;
  ic.target_steps = static_cast<int>(cfg.integer("data.steps"));
  ic.granularity_seconds = cfg.real("data.granularity");
  ic.directed = cfg.boolean("data.directed");
  ic.feature_path = cfg.str("data.features");
  ic.node_label_path = cfg.str("data.node_labels");
  ic.feature_cap = static_cast<int>(cfg.integer("data.feature_cap"));
  ic.limit_days = cfg.integer("data.limit_days");
  return ingest_edge_list(ic, stats);
}

SplitRanges resolve_split(const RunConfig& cfg, const TemporalGraph& tg) {
  int train = static_cast<int>(cfg.integer("split.train"));
  int val = static_cast<int>(cfg.integer("split.val"));
  int test = static_cast<int>(cfg.integer("split.test"));
  const int steps = tg.num_steps();
  if (train == 0 && val == 0 && test == 0) {
    train = std::max(1, steps * 70 / 100);
    val = std::max(1, steps * 15 / 100);
    test = steps - train - val;
    if (test < 1) {
      throw ConfigError("dataset has too few steps (" + std::to_string(steps) +
                        ") for an automatic split; set split.* explicitly");
    }
  }
  return temporal_split(tg, train, val, test);
}

int count_classes(const TemporalGraph& tg, TaskKind task) {
  int max_label = -1;
  for (const GraphSnapshot& snap : tg.snapshots) {
    if (task == TaskKind::edge_class) {
      for (const auto& [edge, label] : snap.edge_labels) {
        (void)edge;
        max_label = std::max(max_label, label);
      }
    } else if (task == TaskKind::node_class) {
      for (const auto& [node, label] : snap.node_labels) {
        (void)node;
        max_label = std::max(max_label, label);
      }
    }
  }
  if (task != TaskKind::link && max_label < 0) {
    throw DataError("dataset carries no labels for the " + to_string(task) + " task");
  }
  return std::max(max_label + 1, 2);
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.task = task_from_string(cfg.str("task.kind"));
  tc.window = static_cast<int>(cfg.integer("train.window"));
  tc.lr = cfg.real("train.lr");
  tc.epochs = static_cast<int>(cfg.integer("train.epochs"));
  tc.patience = static_cast<int>(cfg.integer("train.patience"));
  tc.seed = cfg.u64("seed");
  tc.neg_ratio = static_cast<int>(cfg.integer("task.neg_ratio"));
  tc.eval_neg_ratio = static_cast<int>(cfg.integer("task.eval_neg_ratio"));
  tc.class_weights = cfg.real_list("task.class_weights");
  tc.clip_norm = cfg.real("train.clip_norm");
  tc.target_train_loss = cfg.real("train.target_loss");
  return tc;
}

ModelConfig model_config(const RunConfig& cfg, const TemporalGraph& tg) {
  ModelConfig mc;
  mc.variant = variant_from_string(cfg.str("model.variant"));
  mc.feature_dim = tg.snapshots.empty() ? 0 : tg.snapshots[0].features.cols();
  mc.embedding = static_cast<int>(cfg.integer("model.embedding"));
  mc.num_layers = static_cast<int>(cfg.integer("model.layers"));
  return mc;
}

std::string prepare_out_dir(const RunConfig& cfg) {
  const std::string out = cfg.str("out");
  if (out.empty()) throw ConfigError("config key 'out' must not be empty");
  std::filesystem::create_directories(out);
  cfg.write(out + "/config.resolved");
  return out;
}

int cmd_generate_sbm(const RunConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  write_sbm_dataset(sbm_config(cfg), out);
  std::cout << "wrote " << out << "/edges.txt and " << out << "/manifest.json\n";
  return 0;
}

int cmd_ingest(const RunConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  IngestStats stats;
  IngestConfig ic;
  ic.path = cfg.str("data.path");
  if (ic.path.empty()) throw ConfigError("ingest requires data.path");
  ic.target_steps = static_cast<int>(cfg.integer("data.steps"));
  ic.granularity_seconds = cfg.real("data.granularity");
  ic.directed = cfg.boolean("data.directed");
  ic.feature_path = cfg.str("data.features");
  ic.node_label_path = cfg.str("data.node_labels");
  ic.feature_cap = static_cast<int>(cfg.integer("data.feature_cap"));
  ic.limit_days = cfg.integer("data.limit_days");
  const TemporalGraph tg = ingest_edge_list(ic, &stats);

  std::string cache = cfg.str("data.cache");
  if (cache.empty()) cache = out + "/cache.bin";
  save_snapshot_cache(tg, cache);
  std::cout << "ingested " << stats.lines << " edges (" << stats.aggregated
            << " aggregated) into " << stats.steps << " snapshots over " << stats.nodes
            << " nodes; cache at " << cache << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const TemporalGraph tg = load_dataset(cfg);
  const SplitRanges split = resolve_split(cfg, tg);
  const TrainConfig tc = train_config(cfg);
  const ModelConfig mc = model_config(cfg, tg);

  std::mt19937_64 rng(cfg.u64("seed"));
  EvolveModel model(mc, rng);
  MlpHead head = make_head(mc, tc.task, count_classes(tg, tc.task), rng);

  const TrainResult result = train(model, head, tg, split, tc, out);
  std::cout << "best epoch " << result.best_epoch << " (val " << result.best_val_metric
            << ")";
  if (tc.task == TaskKind::link) {
    std::cout << "; test map " << result.test.map << ", mrr " << result.test.mrr;
  } else {
    std::cout << "; test f1 " << result.test.micro.f1;
  }
  std::cout << "; artifacts in " << out << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  const std::string checkpoint = cfg.str("eval.checkpoint");
  if (checkpoint.empty()) throw ConfigError("evaluate requires eval.checkpoint");
  const std::string out = prepare_out_dir(cfg);
  const TemporalGraph tg = load_dataset(cfg);
  const SplitRanges split = resolve_split(cfg, tg);
  const TrainConfig tc = train_config(cfg);
  const ModelConfig mc = model_config(cfg, tg);

  std::mt19937_64 rng(cfg.u64("seed"));
  EvolveModel model(mc, rng);
  MlpHead head = make_head(mc, tc.task, count_classes(tg, tc.task), rng);
  std::vector<Parameter*> params = model.trainable();
  for (Parameter* p : head.params()) params.push_back(p);
  load_checkpoint(checkpoint, params);

  TrainResult result;
  result.test = evaluate(model, head, tg, split.test_begin, split.test_end, tc);
  write_summary_json(out + "/eval_summary.json", tc.task, result);
  write_step_metrics_csv(out + "/eval_metrics.csv", tc.task, result.test.per_step);
  if (tc.task == TaskKind::link) {
    std::cout << "test map " << result.test.map << ", mrr " << result.test.mrr;
  } else {
    std::cout << "test f1 " << result.test.micro.f1;
  }
  std::cout << "; reports in " << out << "\n";
  return 0;
}

int cmd_gradcheck() {
  const std::vector<GradCheckResult> results = run_gradcheck_suite();
  int failures = 0;
  double worst = 0.0;
  for (const GradCheckResult& r : results) {
    worst = std::max(worst, r.max_rel_err);
    if (!r.pass) {
      ++failures;
      std::cout << "FAIL " << r.name << " max_rel_err " << r.max_rel_err << " tol "
                << r.tolerance << "\n";
    }
  }
  std::cout << results.size() << " checks, " << failures << " failures, worst max_rel_err "
            << worst << "\n";
  return failures == 0 ? 0 : static_cast<int>(ExitCode::numeric);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  try {
    if (argc < 2) {
      print_usage(std::cerr);
      return static_cast<int>(ExitCode::config);
    }
    const std::string command = argv[1];
    if (command == "help" || command == "--help" || command == "-h") {
      print_usage(std::cout);
      return 0;
    }
    const RunConfig cfg = parse_args(argc, argv, 2);
    if (command == "generate-sbm") return cmd_generate_sbm(cfg);
    if (command == "ingest") return cmd_ingest(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "evaluate") return cmd_evaluate(cfg);
    if (command == "gradcheck") return cmd_gradcheck();
    std::cerr << "error: unknown command '" << command << "'\n";
    print_usage(std::cerr);
    return static_cast<int>(ExitCode::config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace evogcn
