#include "evogcn/config.hpp"

#include <fstream>
#include <sstream>

#include "evogcn/errors.hpp"

namespace evogcn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct KeySpec {
  const char* key;
  const char* default_value;
  const char* description;
};

// every configuration key, its default, and the documentation line
constexpr KeySpec kKeys[] = {
    {"seed", "1", "random seed for initialization, sampling and SBM generation"},
    {"out", "run", "output directory for run artifacts"},
    {"data.path", "", "edge-list file: 'source target weight timestamp [label]'"},
    {"data.cache", "", "snapshot cache file; loaded instead of data.path when it exists"},
    {"data.directed", "true", "false adds the reverse of every listed edge"},
    {"data.steps", "0", "bucket timestamps into this many equal-width snapshots"},
    {"data.granularity", "0", "seconds per snapshot (alternative to data.steps)"},
    {"data.limit_days", "0", "keep only the first N days of data (0 = all)"},
    {"data.features", "", "optional feature file: 'node_id v1 ... vd' per line"},
    {"data.node_labels", "", "optional node label file: 'node_id time_step class'"},
    {"data.feature_cap", "100", "degree one-hot cap when no feature file is given"},
    {"split.train", "0", "training steps (0 = 70% of the steps)"},
    {"split.val", "0", "validation steps (0 = 15%, at least 1)"},
    {"split.test", "0", "test steps (0 = the remainder)"},
    {"model.variant", "h", "h, o, gcn or gcn-gru"},
    {"model.embedding", "64", "embedding size shared by the convolution layers"},
    {"model.layers", "2", "number of graph convolution layers"},
    {"task.kind", "link", "link, edge or node"},
    {"task.neg_ratio", "1", "training negatives per positive edge"},
    {"task.eval_neg_ratio", "100", "ranking-pool negatives per positive edge"},
    {"task.class_weights", "", "comma-separated per-class loss weights"},
    {"train.window", "10", "sliding-window length for backpropagation through time"},
    {"train.lr", "0.001", "Adam learning rate"},
    {"train.epochs", "200", "maximum training epochs"},
    {"train.patience", "10", "epochs without validation improvement before stopping"},
    {"train.clip_norm", "5", "global gradient-norm clip"},
    {"train.target_loss", "0", "stop once the epoch training loss drops below (0 = off)"},
    {"sbm.nodes", "100", "generated SBM node count"},
    {"sbm.communities", "2", "generated SBM community count"},
    {"sbm.intra", "0.25", "intra-community edge probability"},
    {"sbm.inter", "0.05", "inter-community edge probability"},
    {"sbm.migrate", "10", "nodes reassigned to another community each step"},
    {"sbm.steps", "10", "generated SBM snapshot count"},
    {"eval.checkpoint", "", "checkpoint file for the evaluate command"},
};

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  for (const KeySpec& spec : kKeys) cfg.values_[spec.key] = spec.default_value;
  return cfg;
}

const std::map<std::string, std::string>& RunConfig::descriptions() {
  static const std::map<std::string, std::string> docs = [] {
    std::map<std::string, std::string> m;
    for (const KeySpec& spec : kKeys) m[spec.key] = spec.description;
    return m;
  }();
  return docs;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at " + path + ":" + std::to_string(line_no));
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::integer(const std::string& key) const {
  const std::string& raw = str(key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + raw + "'");
  }
}

double RunConfig::real(const std::string& key) const {
  const std::string& raw = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + raw + "'");
  }
}

bool RunConfig::boolean(const std::string& key) const {
  const std::string& raw = str(key);
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + raw + "'");
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  const std::string& raw = str(key);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + raw +
                      "'");
  }
}

std::vector<double> RunConfig::real_list(const std::string& key) const {
  const std::string& raw = str(key);
  std::vector<double> out;
  if (trim(raw).empty()) return out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(trim(item)));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects comma-separated numbers, got '" +
                        raw + "'");
    }
  }
  return out;
}

void RunConfig::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write resolved config to " + path);
  for (const auto& [key, value] : values_) {
    out << key << " = " << value << '\n';
  }
}

}  // namespace evogcn
