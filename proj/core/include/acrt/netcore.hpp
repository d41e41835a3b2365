#pragma once

// Tiny rectifier networks for (a + b) mod n: datasets, parameters, batched
// forward/backward, evaluation and activation-grid extraction.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acrt/modmath.hpp"
#include "acrt/signal.hpp"

namespace acrt {

struct Triple {
  std::int32_t a;
  std::int32_t b;
  std::int32_t c;
};

enum class Split { Train, Test, All };

/// All n^2 pairs in a-major order (index a * n + b) with a seeded train/test split.
struct Dataset {
  std::int64_t n = 0;
  std::vector<Triple> pairs;
  std::vector<std::uint8_t> train_mask;
  double split_fraction = 1.0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> indices(Split split) const;
  std::size_t train_size() const;
  std::size_t test_size() const { return pairs.size() - train_size(); }
};

/// Every (a, b, (a + b) mod n) in a-major order.
std::vector<Triple> all_pairs(std::int64_t n);

/// floor(split_fraction * n^2) pairs go to train; the rest to test.
Dataset generate_dataset(Modulus n, double split_fraction, std::uint64_t seed);

enum class ModelKind { OneHotMlp, EmbedMlp, MeanEmbed };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::EmbedMlp;
  int depth = 1;
  int width = 1024;
  int embed_dim = 128;
  std::int64_t n = 59;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Replaces a hidden layer's preactivations by fitted closed forms; a missing
/// fit pins that neuron's preactivation to zero.
struct LayerOverride {
  int layer = 1;  // 1-based hidden layer index
  std::vector<std::optional<SinusoidFit>> neurons;
};

/// Parameters of a network.
///
/// OneHotMlp feeds [onehot(a), onehot(b)] (2n inputs) to the first layer.
/// EmbedMlp feeds [E_A[a], E_B[b]] (2 * embed_dim inputs) from separate tables.
/// MeanEmbed feeds (E[a] + E[b]) / 2 (embed_dim inputs) from one shared table
/// stored in embed_a. The output layer maps the last hidden layer to n logits
/// and has no bias.
struct NetworkParams {
  ModelKind kind = ModelKind::OneHotMlp;
  std::int64_t n = 0;
  int embed_dim = 0;
  Eigen::MatrixXd embed_a;  // n x embed_dim, empty for OneHotMlp
  Eigen::MatrixXd embed_b;  // n x embed_dim, EmbedMlp only
  std::vector<DenseLayer> hidden;
  Eigen::MatrixXd output;  // n x width of last hidden layer
  std::vector<LayerOverride> overrides;

  int depth() const { return static_cast<int>(hidden.size()); }
  int width(int layer) const;  // 1-based
  int input_dim() const;
  void validate() const;
  const LayerOverride* override_for(int layer) const;

  /// Same shapes, all zeros, no overrides.
  NetworkParams zeros_like() const;
};

struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Eigen::MatrixXd> map() const { return {data, rows, cols}; }
};

struct ConstTensorRef {
  std::string name;
  const double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<const Eigen::MatrixXd> map() const { return {data, rows, cols}; }
};

/// Trainable tensors in a fixed order: embed_a, embed_b, hidden.<i>.weight,
/// hidden.<i>.bias, output.
std::vector<TensorRef> tensors(NetworkParams& params);
std::vector<ConstTensorRef> tensors(const NetworkParams& params);

/// Scaled-uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and
/// bias; embedding rows have fan_in 1 (one-hot input).
NetworkParams init_model(const ModelConfig& config, std::uint64_t seed);

struct ForwardResult {
  Eigen::VectorXd logits;
  std::vector<Eigen::VectorXd> preactivations;  // per hidden layer, pre-rectifier
};

ForwardResult forward(const NetworkParams& params, Residue a, Residue b, bool capture = false);

/// Column-per-example activations for a batch of pairs.
struct BatchActivations {
  std::vector<Eigen::MatrixXd> preactivations;  // per layer, width x batch
  Eigen::MatrixXd logits;                       // n x batch
};

BatchActivations forward_batch(const NetworkParams& params, std::span<const Triple> batch,
                               bool keep_preactivations = true);

/// Logits for every pair of the dataset order (column a * n + b).
Eigen::MatrixXd all_logits(const NetworkParams& params);

struct LossAndGradient {
  double loss = 0.0;           // cross-entropy + l2 * sum theta^2
  double cross_entropy = 0.0;  // mean over batch
  NetworkParams gradient;
};

/// Mean cross-entropy over the batch plus l2 * ||theta||^2 and its exact gradient.
LossAndGradient loss_and_gradient(const NetworkParams& params, std::span<const Triple> batch,
                                  double l2);

double l2_norm_squared(const NetworkParams& params);

struct AccuracyReport {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t ties = 0;  // examples whose maximal logit is shared
};

/// Argmax accuracy with lowest-index tie-break. Throws on an empty subset.
AccuracyReport accuracy(const Eigen::MatrixXd& logits, const Dataset& data, Split split);
AccuracyReport accuracy(const NetworkParams& params, const Dataset& data, Split split);

/// Mean of logit_c - max_{k != c} logit_k. Throws on an empty subset.
double margin(const Eigen::MatrixXd& logits, const Dataset& data, Split split);
double margin(const NetworkParams& params, const Dataset& data, Split split);

/// Mean cross-entropy (no penalty). Throws on an empty subset.
double cross_entropy(const Eigen::MatrixXd& logits, const Dataset& data, Split split);
double cross_entropy(const NetworkParams& params, const Dataset& data, Split split);

/// n x n pre-rectifier grids of every neuron in a 1-based hidden layer.
std::vector<ActivationGrid> activation_grids(const NetworkParams& params, int layer);

}  // namespace acrt
