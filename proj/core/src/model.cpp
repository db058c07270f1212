#include "evogcn/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "evogcn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace evogcn {

Variant variant_from_string(const std::string& s) {
  if (s == "h") return Variant::h;
  if (s == "o") return Variant::o;
  if (s == "gcn") return Variant::static_gcn;
  if (s == "gcn-gru") return Variant::gcn_gru;
  throw ConfigError("unknown model variant '" + s + "' (expected h, o, gcn or gcn-gru)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::h: return "h";
    case Variant::o: return "o";
    case Variant::static_gcn: return "gcn";
    case Variant::gcn_gru: return "gcn-gru";
  }
  return "?";
}

EgcuHResult egcu_h(Tape& tape, const SparseAdjacency& a_hat, Var h, Var w_prev,
                   MatrixGruParams& gru, SummarizeParams& summ, Activation act) {
  const int k = tape.value(w_prev).cols();
  Var x = tape.transpose(summarize(tape, h, k, summ));
  Var w = matrix_gru(tape, x, w_prev, gru);
  return {gconv(tape, a_hat, h, w, act), w};
}

EgcuOResult egcu_o(Tape& tape, const SparseAdjacency& a_hat, Var h, Var w_prev,
                   Var cell_prev, MatrixLstmParams& lstm, Activation act) {
  LstmOut evolved = matrix_lstm(tape, w_prev, cell_prev, lstm);
  return {gconv(tape, a_hat, h, evolved.output, act), evolved.output, evolved.cell};
}

EvolveModel::EvolveModel(const ModelConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  if (cfg.feature_dim < 1) throw ConfigError("model feature_dim must be >= 1");
  if (cfg.embedding < 1) throw ConfigError("model embedding size must be >= 1");
  if (cfg.num_layers < 1) throw ConfigError("model needs at least one layer");

  for (int l = 0; l < cfg.num_layers; ++l) {
    LayerSpec spec;
    spec.d_in = l == 0 ? cfg.feature_dim : cfg.embedding;
    spec.d_out = cfg.embedding;
    spec.act = l + 1 < cfg.num_layers ? Activation::relu : Activation::identity;
    specs_.push_back(spec);
  }

  for (int l = 0; l < cfg.num_layers; ++l) {
    const LayerSpec& spec = specs_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.d_in));
    const std::string prefix = "layer" + std::to_string(l);
    w0_.push_back(std::make_unique<Parameter>(
        prefix + ".w0", Matrix::uniform(spec.d_in, spec.d_out, -bound, bound, rng)));
    if (cfg.variant == Variant::h) {
      summaries_.push_back(
          std::make_unique<SummarizeParams>(prefix + ".summarize", spec.d_in, rng));
      grus_.push_back(std::make_unique<MatrixGruParams>(prefix + ".gru", spec.d_in, rng));
    } else if (cfg.variant == Variant::o) {
      lstms_.push_back(std::make_unique<MatrixLstmParams>(prefix + ".lstm", spec.d_in, rng));
    }
  }
  if (cfg.variant == Variant::gcn_gru) {
    node_gru_ = std::make_unique<MatrixGruParams>("node_gru", cfg.embedding, rng);
  }
}

std::vector<Parameter*> EvolveModel::trainable() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < w0_.size(); ++l) {
    out.push_back(w0_[l].get());
    if (cfg_.variant == Variant::h) {
      for (Parameter* p : summaries_[l]->params()) out.push_back(p);
      for (Parameter* p : grus_[l]->params()) out.push_back(p);
    } else if (cfg_.variant == Variant::o) {
      for (Parameter* p : lstms_[l]->params()) out.push_back(p);
    }
  }
  if (node_gru_) {
    for (Parameter* p : node_gru_->params()) out.push_back(p);
  }
  return out;
}

void EvolveModel::zero_grad() {
  for (Parameter* p : trainable()) p->zero_grad();
}

WindowForward EvolveModel::forward_window(
    Tape& tape, const std::vector<const GraphSnapshot*>& window) {
  if (window.empty()) throw ArgumentError("forward_window requires a non-empty window");
  for (const GraphSnapshot* s : window) {
    if (s->features.cols() != cfg_.feature_dim) {
      throw DimensionError("snapshot " + std::to_string(s->time_index) + " features " +
                           s->features.shape_str() + " do not match model feature_dim " +
                           std::to_string(cfg_.feature_dim));
    }
  }

  WindowForward result;
  const int layers = cfg_.num_layers;

  std::vector<Var> w_state(layers);
  std::vector<Var> cell_state(layers);
  for (int l = 0; l < layers; ++l) {
    w_state[l] = tape.param(*w0_[l]);
    if (cfg_.variant == Variant::o) {
      cell_state[l] = tape.leaf(Matrix(specs_[l].d_in, specs_[l].d_out));
    }
  }
  Var node_state;  // gcn-gru: d_emb x n hidden, one column per node

  for (const GraphSnapshot* snap : window) {
    const SparseAdjacency& a_hat = snap->normalized();
    Var h = tape.leaf(snap->features);
    std::vector<Var> used(layers);

    for (int l = 0; l < layers; ++l) {
      switch (cfg_.variant) {
        case Variant::h: {
          EgcuHResult r = egcu_h(tape, a_hat, h, w_state[l], *grus_[l], *summaries_[l],
                                 specs_[l].act);
          w_state[l] = r.weight;
          h = r.h_next;
          break;
        }
        case Variant::o: {
          EgcuOResult r = egcu_o(tape, a_hat, h, w_state[l], cell_state[l], *lstms_[l],
                                 specs_[l].act);
          w_state[l] = r.weight;
          cell_state[l] = r.cell;
          h = r.h_next;
          break;
        }
        case Variant::static_gcn:
        case Variant::gcn_gru:
          h = gconv(tape, a_hat, h, w_state[l], specs_[l].act);
          break;
      }
      used[l] = w_state[l];
    }

    if (cfg_.variant == Variant::gcn_gru) {
      Var x = tape.transpose(h);
      if (!node_state.valid()) {
        node_state = tape.leaf(Matrix(cfg_.embedding, tape.value(x).cols()));
      }
      node_state = matrix_gru(tape, x, node_state, *node_gru_);
      h = tape.transpose(node_state);
    }

    result.embeddings.push_back(h);
    result.weights.push_back(std::move(used));
  }
  return result;
}

std::vector<const GraphSnapshot*> window_view(const TemporalGraph& tg, int begin, int end) {
  if (begin < 0 || end > tg.num_steps() || begin >= end) {
    throw ArgumentError("window [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") out of range for " + std::to_string(tg.num_steps()) + " steps");
  }
  std::vector<const GraphSnapshot*> out;
  out.reserve(end - begin);
  for (int t = begin; t < end; ++t) out.push_back(&tg.snapshots[t]);
  return out;
}

void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw DataError("cannot write checkpoint file " + path);
  std::ofstream manifest(path + ".manifest");
  if (!manifest) throw DataError("cannot write checkpoint manifest " + path + ".manifest");

  manifest << "evogcn-checkpoint 1\n";
  std::uint64_t offset = 0;
  for (const Parameter* p : params) {
    const auto bytes = static_cast<std::uint64_t>(p->value.size()) * sizeof(double);
    manifest << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << ' '
             << offset << '\n';
    bin.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  if (!bin || !manifest) throw DataError("short write while saving checkpoint " + path);
}

void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
  std::ifstream manifest(path + ".manifest");
  if (!manifest) throw DataError("cannot read checkpoint manifest " + path + ".manifest");
  std::string header;
  std::getline(manifest, header);
  if (header != "evogcn-checkpoint 1") {
    throw DataError("unrecognized checkpoint manifest header: '" + header + "'");
  }

  struct Entry {
    int rows, cols;
    std::uint64_t offset;
  };
  std::map<std::string, Entry> entries;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string name;
    Entry e{};
    if (!(ss >> name >> e.rows >> e.cols >> e.offset)) {
      throw DataError("malformed checkpoint manifest line: '" + line + "'");
    }
    entries[name] = e;
  }

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw DataError("cannot read checkpoint file " + path);
  for (Parameter* p : params) {
    auto it = entries.find(p->name);
    if (it == entries.end()) {
      throw DataError("checkpoint " + path + " is missing parameter '" + p->name + "'");
    }
    const Entry& e = it->second;
    if (e.rows != p->value.rows() || e.cols != p->value.cols()) {
      throw DataError("checkpoint parameter '" + p->name + "' has shape " +
                      std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                      ", expected " + p->value.shape_str());
    }
    bin.seekg(static_cast<std::streamoff>(e.offset));
    bin.read(reinterpret_cast<char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!bin) throw DataError("short read for parameter '" + p->name + "' in " + path);
  }
}

}  // namespace evogcn
