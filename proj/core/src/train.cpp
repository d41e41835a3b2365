#include "acrt/train.hpp"

#include <cmath>
#include <string>

#include "acrt/rng.hpp"
#include "engine.hpp"

namespace acrt {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
  if (!(l2_lambda >= 0.0)) throw std::invalid_argument("train.l2_lambda must be >= 0");
  if (batch_size < 0) throw std::invalid_argument("train.batch_size must be >= 0");
  if (max_steps < 0) throw std::invalid_argument("train.max_steps must be >= 0");
  if (eval_every < 0) throw std::invalid_argument("train.eval_every must be >= 0");
  if (steps_after_target < 0) throw std::invalid_argument("train.steps_after_target must be >= 0");
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
    throw std::invalid_argument("train.target_accuracy must be in (0, 1]");
  }
}

TrainingDiverged::TrainingDiverged(int step)
    : std::runtime_error("training diverged (non-finite loss) at step " + std::to_string(step)),
      step_(step) {}

namespace {

HistoryEntry evaluate(const NetworkParams& params, const Dataset& data, int step) {
  const Eigen::MatrixXd logits = all_logits(params);
  HistoryEntry h;
  h.step = step;
  h.train_loss = cross_entropy(logits, data, Split::Train);
  h.train_accuracy = accuracy(logits, data, Split::Train).accuracy;
  if (data.test_size() > 0) h.test_accuracy = accuracy(logits, data, Split::Test).accuracy;
  h.mean_margin = margin(logits, data, Split::All);
  return h;
}

bool at_target(const HistoryEntry& h, double target) {
  return h.train_accuracy >= target && (!h.test_accuracy || *h.test_accuracy >= target);
}

}  // namespace

TrainedModel train(const ModelConfig& model_config, const TrainConfig& train_config,
                   const Dataset& data) {
  return train_from(init_model(model_config, train_config.seed), model_config, train_config, data);
}

TrainedModel train_from(NetworkParams params, const ModelConfig& model_config,
                        const TrainConfig& tc, const Dataset& data) {
  model_config.validate();
  tc.validate();
  params.validate();
  if (data.n != params.n) throw std::invalid_argument("train: dataset modulus does not match model");
  const auto train_idx = data.indices(Split::Train);
  if (train_idx.empty()) throw std::invalid_argument("train: empty training split");

  TrainedModel out;
  out.model_config = model_config;
  out.train_config = tc;

  const auto batch_size = tc.batch_size == 0 ? train_idx.size()
                                             : std::min<std::size_t>(tc.batch_size, train_idx.size());
  const auto steps_per_epoch = (train_idx.size() + batch_size - 1) / batch_size;
  const auto eval_every = tc.eval_every > 0 ? static_cast<std::size_t>(tc.eval_every) : steps_per_epoch;

  NetworkParams grad = params.zeros_like();
  NetworkParams m1 = params.zeros_like();
  NetworkParams m2 = params.zeros_like();
  auto theta = tensors(params);
  auto g = tensors(grad);
  auto mom1 = tensors(m1);
  auto mom2 = tensors(m2);

  Rng order_rng(derive_seed(tc.seed, 0xba7c));
  std::vector<std::size_t> order = train_idx;
  std::vector<Triple> batch;
  batch.reserve(batch_size);
  detail::Engine engine;

  double beta1_pow = 1.0, beta2_pow = 1.0;
  int step = 0;
  std::size_t cursor = order.size();  // forces a shuffle before the first batch

  auto record = [&](int at) {
    out.history.push_back(evaluate(params, data, at));
    if (!std::isfinite(out.history.back().train_loss)) throw TrainingDiverged(at);
    out.reached_target = at_target(out.history.back(), tc.target_accuracy);
    if (out.reached_target && !out.target_step) out.target_step = at;
  };
  auto done = [&] {
    if (out.target_step && step >= *out.target_step + tc.steps_after_target) return true;
    return step >= tc.max_steps;
  };

  record(0);
  while (!done()) {
    if (cursor >= order.size()) {
      order_rng.shuffle(std::span<std::size_t>(order));
      cursor = 0;
    }
    batch.clear();
    const auto end = std::min(order.size(), cursor + batch_size);
    for (; cursor < end; ++cursor) batch.push_back(data.pairs[order[cursor]]);

    const double ce = engine.forward_backward(params, batch, grad);
    ++step;
    if (!std::isfinite(ce)) throw TrainingDiverged(step);

    beta1_pow *= tc.adam_beta1;
    beta2_pow *= tc.adam_beta2;
    const double lr_t = tc.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto w = theta[i].map();
      auto gr = g[i].map();
      auto m = mom1[i].map();
      auto v = mom2[i].map();
      if (tc.l2_lambda != 0.0) gr += (2.0 * tc.l2_lambda) * w;
      m = tc.adam_beta1 * m + (1.0 - tc.adam_beta1) * gr;
      v = tc.adam_beta2 * v + (1.0 - tc.adam_beta2) * gr.cwiseAbs2();
      // Epsilon folded into the bias-corrected denominator.
      w.array() -= lr_t * m.array() /
                   (v.array().sqrt() + tc.adam_epsilon * std::sqrt(1.0 - beta2_pow));
    }

    const bool last = step == tc.max_steps ||
                      (out.target_step && step == *out.target_step + tc.steps_after_target);
    if (static_cast<std::size_t>(step) % eval_every == 0 || last) record(step);
  }
  out.steps = step;
  out.params = std::move(params);
  return out;
}

}  // namespace acrt
