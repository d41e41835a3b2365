#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "acrt/netcore.hpp"

namespace acrt {

struct TrainConfig {
  double learning_rate = 7.5e-4;
  double l2_lambda = 1e-5;
  int batch_size = 256;  // 0 = full batch
  int max_steps = 20000;
  std::uint64_t seed = 0;
  double target_accuracy = 1.0;
  int eval_every = 0;  // steps between evaluations; 0 = once per epoch
  int steps_after_target = 0;  // keep training this long once the target is first met
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct HistoryEntry {
  int step = 0;
  double train_loss = 0.0;  // mean cross-entropy on the train split
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;  // absent when the test split is empty
  double mean_margin = 0.0;             // over all n^2 pairs
};

struct TrainedModel {
  NetworkParams params;
  ModelConfig model_config;
  TrainConfig train_config;
  std::vector<HistoryEntry> history;
  int steps = 0;
  bool reached_target = false;     // the final evaluation meets the target
  std::optional<int> target_step;  // first evaluation that met it
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int step);
  int step() const { return step_; }

 private:
  int step_;
};

/// Adam on mean cross-entropy + l2 * ||theta||^2, minibatches from one seeded
/// shuffle per epoch. Stops at max_steps or steps_after_target steps after both
/// splits first reach the target.
TrainedModel train(const ModelConfig& model_config, const TrainConfig& train_config,
                   const Dataset& data);

/// Same loop starting from given parameters.
TrainedModel train_from(NetworkParams params, const ModelConfig& model_config,
                        const TrainConfig& train_config, const Dataset& data);

}  // namespace acrt
