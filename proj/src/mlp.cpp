#include "taxon/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "taxon/error.hpp"
#include "taxon/rng.hpp"

namespace taxon {
namespace {

using nlohmann::json;

// Per-sample forward state: acts[0] is the input, acts[l + 1] the output of
// layer l (post-ReLU for hidden layers, raw logits for the last one).
struct ForwardState {
  std::vector<std::vector<double>> acts;
  std::vector<double> probs;
  double log_sum = 0.0;  // max + log(sum exp(z - max)) of the logits
};

void affine(const DenseLayer& layer, const std::vector<double>& in, std::vector<double>& out,
            std::vector<std::size_t>& nz) {
  nz.clear();
  for (std::size_t j = 0; j < in.size(); ++j) {
    if (in[j] != 0.0) nz.push_back(j);
  }
  out.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t r = 0; r < layer.rows; ++r) {
    const double* row = layer.weights.data() + r * layer.cols;
    double s = out[r];
    for (std::size_t j : nz) s += row[j] * in[j];
    out[r] = s;
  }
}

void run_forward(const MlpModel& model, std::span<const float> x, ForwardState& st) {
  if (x.size() != model.input_dim) {
    throw DimensionMismatch("model expects dim " + std::to_string(model.input_dim) + ", got " +
                            std::to_string(x.size()));
  }
  const std::size_t n_layers = model.layers.size();
  st.acts.resize(n_layers + 1);
  st.acts[0].assign(x.begin(), x.end());
  std::vector<std::size_t> nz;
  for (std::size_t l = 0; l < n_layers; ++l) {
    affine(model.layers[l], st.acts[l], st.acts[l + 1], nz);
    if (l + 1 < n_layers) {
      for (auto& v : st.acts[l + 1]) v = v > 0.0 ? v : 0.0;
    }
  }
  const auto& logits = st.acts.back();
  const double m = *std::max_element(logits.begin(), logits.end());
  st.probs.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    st.probs[i] = std::exp(logits[i] - m);
    sum += st.probs[i];
  }
  for (auto& p : st.probs) p /= sum;
  st.log_sum = m + std::log(sum);
}

double l2_penalty(const MlpModel& model, double l2) {
  if (l2 == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& layer : model.layers) {
    for (double w : layer.weights) s += w * w;
  }
  return 0.5 * l2 * s;
}

std::unordered_map<std::string, std::size_t> label_index(const std::vector<std::string>& labels) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) idx.emplace(labels[i], i);
  return idx;
}

std::size_t argmax_class(const MlpModel& model, const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best] ||
        (probs[i] == probs[best] && model.class_labels[i] < model.class_labels[best])) {
      best = i;
    }
  }
  return best;
}

}  // namespace

void MlpHyperparams::validate() const {
  for (auto h : hidden_dims) {
    if (h == 0) throw InvalidArgument("hidden layer widths must be positive");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be positive");
  }
  if (epochs == 0) throw InvalidArgument("epochs must be positive");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw InvalidArgument("l2 must be non-negative");
}

void MlpModel::validate() const {
  if (input_dim == 0) throw CorruptFile("model input_dim is zero");
  if (class_labels.empty()) throw CorruptFile("model has no classes");
  if (layers.empty()) throw CorruptFile("model has no layers");
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.cols != in || layer.rows == 0 || layer.weights.size() != layer.rows * layer.cols ||
        layer.bias.size() != layer.rows) {
      throw CorruptFile("layer " + std::to_string(l) + " has inconsistent shape");
    }
    for (double w : layer.weights) {
      if (!std::isfinite(w)) throw CorruptFile("non-finite weight in layer " + std::to_string(l));
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) throw CorruptFile("non-finite bias in layer " + std::to_string(l));
    }
    in = layer.rows;
  }
  if (in != class_labels.size()) throw CorruptFile("output layer width differs from class count");
  if (activation != "relu") throw CorruptFile("unsupported activation '" + activation + "'");
}

MlpModel init_mlp(std::size_t input_dim, std::vector<std::string> class_labels,
                  const std::vector<std::size_t>& hidden_dims, std::uint64_t seed,
                  std::string provider_fingerprint) {
  if (input_dim == 0) throw InvalidArgument("input dim must be positive");
  if (class_labels.empty()) throw EmptyDataset("no classes to train");
  MlpModel m;
  m.input_dim = input_dim;
  m.class_labels = std::move(class_labels);
  m.provider_fingerprint = std::move(provider_fingerprint);

  Rng rng(seed);
  std::size_t in = input_dim;
  std::vector<std::size_t> widths = hidden_dims;
  widths.push_back(m.class_labels.size());
  for (std::size_t out : widths) {
    DenseLayer layer(out, in);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& w : layer.weights) w = uniform(rng, -limit, limit);
    m.layers.push_back(std::move(layer));
    in = out;
  }
  return m;
}

std::vector<double> forward(const MlpModel& model, std::span<const float> x) {
  ForwardState st;
  run_forward(model, x, st);
  return st.probs;
}

double batch_loss(const MlpModel& model, std::span<const TrainingSample> batch, double l2) {
  if (batch.empty()) throw EmptyDataset("empty batch");
  ForwardState st;
  double total = 0.0;
  for (const auto& s : batch) {
    run_forward(model, s.x, st);
    total += st.log_sum - st.acts.back()[s.label];
  }
  return total / static_cast<double>(batch.size()) + l2_penalty(model, l2);
}

Gradients compute_gradients(const MlpModel& model, std::span<const TrainingSample> batch,
                            double l2, double* loss) {
  if (batch.empty()) throw EmptyDataset("empty batch");
  Gradients g;
  for (const auto& layer : model.layers) g.layers.emplace_back(layer.rows, layer.cols);

  const std::size_t n_layers = model.layers.size();
  ForwardState st;
  std::vector<double> delta;
  std::vector<double> prev_delta;
  std::vector<std::size_t> nz;
  double total = 0.0;

  for (const auto& s : batch) {
    if (s.label >= model.num_classes()) throw InvalidArgument("label index out of range");
    run_forward(model, s.x, st);
    total += st.log_sum - st.acts.back()[s.label];

    delta = st.probs;
    delta[s.label] -= 1.0;
    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& layer = model.layers[l];
      auto& gl = g.layers[l];
      const auto& in = st.acts[l];
      nz.clear();
      for (std::size_t j = 0; j < in.size(); ++j) {
        if (in[j] != 0.0) nz.push_back(j);
      }
      for (std::size_t r = 0; r < layer.rows; ++r) {
        const double d = delta[r];
        gl.bias[r] += d;
        if (d == 0.0) continue;
        double* grow = gl.weights.data() + r * layer.cols;
        for (std::size_t j : nz) grow[j] += d * in[j];
      }
      if (l == 0) break;
      prev_delta.assign(layer.cols, 0.0);
      for (std::size_t r = 0; r < layer.rows; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* row = layer.weights.data() + r * layer.cols;
        for (std::size_t j = 0; j < layer.cols; ++j) prev_delta[j] += row[j] * d;
      }
      // ReLU derivative, taken as 0 at the kink.
      for (std::size_t j = 0; j < layer.cols; ++j) {
        if (!(in[j] > 0.0)) prev_delta[j] = 0.0;
      }
      delta.swap(prev_delta);
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto& gl = g.layers[l];
    const auto& layer = model.layers[l];
    for (std::size_t i = 0; i < gl.weights.size(); ++i) {
      gl.weights[i] = gl.weights[i] * inv + l2 * layer.weights[i];
    }
    for (auto& b : gl.bias) b *= inv;
  }
  if (loss) *loss = total * inv + l2_penalty(model, l2);
  return g;
}

double top1_accuracy(const MlpModel& model, const LabeledDataset& data) {
  if (data.examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (const auto& ex : data.examples) {
    auto probs = forward(model, ex.embedding);
    if (model.class_labels[argmax_class(model, probs)] == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

TrainResult train_mlp(const LabeledDataset& train, const LabeledDataset& valid,
                      const MlpHyperparams& hp, std::string provider_fingerprint) {
  hp.validate();
  if (train.examples.empty()) throw EmptyDataset("training set is empty");
  const std::size_t dim = train.examples.front().embedding.dim();
  for (const auto& ex : train.examples) {
    if (ex.embedding.dim() != dim) throw DimensionMismatch("training embeddings differ in dim");
  }
  for (const auto& ex : valid.examples) {
    if (ex.embedding.dim() != dim) throw DimensionMismatch("validation embeddings differ in dim");
  }

  std::vector<std::string> labels = train.class_labels;
  if (labels.empty()) {
    LabeledDataset copy = train;
    refresh_class_index(copy);
    labels = copy.class_labels;
  }
  const auto index = label_index(labels);
  std::vector<TrainingSample> samples;
  samples.reserve(train.examples.size());
  for (const auto& ex : train.examples) {
    auto it = index.find(ex.label);
    if (it == index.end()) throw InvalidArgument("label " + ex.label + " missing from class list");
    samples.push_back({ex.embedding.span(), it->second});
  }

  // Initialization and shuffling draw from separate streams of the seed.
  TrainResult result;
  result.model = init_mlp(dim, labels, hp.hidden_dims, hp.seed, std::move(provider_fingerprint));
  Rng order_rng(hp.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingSample> batch;
  batch.reserve(hp.batch_size);

  MlpModel best_model = result.model;
  double best_acc = -1.0;
  std::size_t since_best = 0;
  const bool track_valid = !valid.examples.empty();

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), order_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += hp.batch_size) {
      const std::size_t end = std::min(order.size(), begin + hp.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(samples[order[i]]);
      auto g = compute_gradients(result.model, batch, hp.l2);
      for (std::size_t l = 0; l < g.layers.size(); ++l) {
        auto& layer = result.model.layers[l];
        const auto& gl = g.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
          layer.weights[i] -= hp.learning_rate * gl.weights[i];
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
          layer.bias[i] -= hp.learning_rate * gl.bias[i];
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = batch_loss(result.model, samples, hp.l2);
    if (!std::isfinite(rec.train_loss)) {
      throw NonFiniteLoss("training loss became " + std::to_string(rec.train_loss) +
                          " at epoch " + std::to_string(epoch) + "; try a smaller learning rate");
    }
    rec.valid_accuracy = track_valid ? top1_accuracy(result.model, valid)
                                     : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);

    if (!track_valid) {
      result.best_epoch = epoch;
      continue;
    }
    if (rec.valid_accuracy > best_acc) {
      best_acc = rec.valid_accuracy;
      best_model = result.model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (hp.early_stop_patience > 0 && ++since_best >= hp.early_stop_patience) {
      result.model = std::move(best_model);
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

TopKPrediction rank_topk(const MlpModel& model, const std::vector<double>& probs, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t n = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return model.class_labels[a] < model.class_labels[b];
                    });
  TopKPrediction out;
  for (std::size_t i = 0; i < n; ++i) out.ranked.push_back({model.class_labels[idx[i]], probs[idx[i]]});
  return out;
}

TopKPrediction predict_topk(const MlpModel& model, const EmbeddingVector& x, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  return rank_topk(model, forward(model, x), k);
}

std::string model_to_json(const MlpModel& model) {
  json j;
  j["version"] = kModelFormatVersion;
  j["input_dim"] = model.input_dim;
  j["activation"] = model.activation;
  j["class_labels"] = model.class_labels;
  j["provider_fingerprint"] = model.provider_fingerprint;
  j["layers"] = json::array();
  for (const auto& layer : model.layers) {
    j["layers"].push_back({{"rows", layer.rows},
                           {"cols", layer.cols},
                           {"weights", layer.weights},
                           {"bias", layer.bias}});
  }
  return j.dump();
}

MlpModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("model is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version")) throw CorruptFile("model lacks a version field");
  // The version may arrive as a number or a string.
  std::string version = j["version"].is_string() ? j["version"].get<std::string>()
                                                  : j["version"].dump();
  if (version != std::to_string(kModelFormatVersion)) {
    throw VersionMismatch("model format version " + version + ", expected " +
                          std::to_string(kModelFormatVersion));
  }
  MlpModel m;
  try {
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.activation = j.at("activation").get<std::string>();
    m.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    m.provider_fingerprint = j.at("provider_fingerprint").get<std::string>();
    for (const auto& jl : j.at("layers")) {
      DenseLayer layer;
      layer.rows = jl.at("rows").get<std::size_t>();
      layer.cols = jl.at("cols").get<std::size_t>();
      layer.weights = jl.at("weights").get<std::vector<double>>();
      layer.bias = jl.at("bias").get<std::vector<double>>();
      m.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("model: ") + e.what());
  }
  m.validate();
  return m;
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << model_to_json(model) << '\n';
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFile("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

bool check_fingerprint(const MlpModel& model, const std::string& provider_fingerprint,
                       FingerprintPolicy policy) {
  if (model.provider_fingerprint == provider_fingerprint) return true;
  const std::string msg = "model trained with '" + model.provider_fingerprint +
                          "' but provider is '" + provider_fingerprint + "'";
  if (policy == FingerprintPolicy::kFail) throw FingerprintMismatch(msg);
  std::cerr << "taxon: warning: " << msg << '\n';
  return false;
}

}  // namespace taxon
