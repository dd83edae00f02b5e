#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taxon/embedding.hpp"
#include "taxon/weaklabel.hpp"

namespace taxon {

struct MlpHyperparams {
  std::vector<std::size_t> hidden_dims{256};
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
  // 0 disables early stopping.
  std::size_t early_stop_patience = 10;

  void validate() const;
};

// Fully connected layer computing W x + b with W stored row-major,
// `rows` outputs by `cols` inputs.
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t r, std::size_t c) : rows(r), cols(c), weights(r * c, 0.0), bias(r, 0.0) {}

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  bool operator==(const DenseLayer&) const = default;
};

// Hidden layers use ReLU; the last layer feeds a softmax over class_labels.
// Parameters are held in double precision.
struct MlpModel {
  std::size_t input_dim = 0;
  std::vector<std::string> class_labels;
  std::vector<DenseLayer> layers;
  std::string activation = "relu";
  std::string provider_fingerprint;

  std::size_t num_classes() const { return class_labels.size(); }
  // Checks that layer shapes chain from input_dim to num_classes and that
  // every parameter is finite. Throws CorruptFile.
  void validate() const;

  bool operator==(const MlpModel&) const = default;
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpModel init_mlp(std::size_t input_dim, std::vector<std::string> class_labels,
                  const std::vector<std::size_t>& hidden_dims, std::uint64_t seed,
                  std::string provider_fingerprint = {});

// Softmax probabilities over the model's classes. Throws DimensionMismatch.
std::vector<double> forward(const MlpModel& model, std::span<const float> x);
inline std::vector<double> forward(const MlpModel& model, const EmbeddingVector& x) {
  return forward(model, x.span());
}

struct TrainingSample {
  std::span<const float> x;
  std::size_t label = 0;  // index into class_labels
};

// Gradients share the model's layer shapes.
struct Gradients {
  std::vector<DenseLayer> layers;
};

// Mean cross-entropy over the batch plus (l2 / 2) * sum of squared weights
// (biases are not penalized).
double batch_loss(const MlpModel& model, std::span<const TrainingSample> batch, double l2);

// Backpropagated gradient of batch_loss. Throws EmptyDataset for an empty
// batch and DimensionMismatch for a wrongly sized input.
Gradients compute_gradients(const MlpModel& model, std::span<const TrainingSample> batch,
                            double l2, double* loss = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  // NaN when no validation data was supplied.
  double valid_accuracy = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

// Mini-batch SGD with a fixed learning rate. Each epoch reshuffles the
// training order from a generator seeded once with hp.seed. Early stopping
// tracks validation top-1 accuracy; when it triggers, the best epoch's
// weights are returned.
TrainResult train_mlp(const LabeledDataset& train, const LabeledDataset& valid,
                      const MlpHyperparams& hp, std::string provider_fingerprint = {});

struct RankedClass {
  std::string id;
  double probability = 0.0;

  bool operator==(const RankedClass&) const = default;
};

struct TopKPrediction {
  std::vector<RankedClass> ranked;

  bool operator==(const TopKPrediction&) const = default;
};

// Top min(k, C) classes by probability, ties by ascending class id.
TopKPrediction predict_topk(const MlpModel& model, const EmbeddingVector& x, std::size_t k);
// Same ranking rule applied to an already computed distribution.
TopKPrediction rank_topk(const MlpModel& model, const std::vector<double>& probs, std::size_t k);

// Fraction of examples whose top-1 class equals the label.
double top1_accuracy(const MlpModel& model, const LabeledDataset& data);

inline constexpr int kModelFormatVersion = 1;

void save_model(const MlpModel& model, const std::string& path);
std::string model_to_json(const MlpModel& model);
// Throws VersionMismatch or CorruptFile.
MlpModel load_model(const std::string& path);
MlpModel model_from_json(const std::string& text);

enum class FingerprintPolicy { kFail, kWarn };

// Throws FingerprintMismatch under kFail; logs to stderr under kWarn.
// Returns true when the fingerprints agree.
bool check_fingerprint(const MlpModel& model, const std::string& provider_fingerprint,
                       FingerprintPolicy policy = FingerprintPolicy::kFail);

}  // namespace taxon
