#pragma once

// Batched forward/backward with reusable buffers. Internal to acrt_core.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "acrt/netcore.hpp"

namespace acrt::detail {

class Engine {
 public:
  /// Runs the forward pass; results stay in preactivations() / logits().
  void forward(const NetworkParams& params, std::span<const Triple> batch);

  /// Forward + backward of the mean cross-entropy; writes d(CE)/d(theta) into
  /// `gradient` (same shapes as params, no penalty term). Returns the mean CE.
  double forward_backward(const NetworkParams& params, std::span<const Triple> batch,
                          NetworkParams& gradient);

  const std::vector<Eigen::MatrixXd>& preactivations() const { return pre_; }
  const Eigen::MatrixXd& logits() const { return logits_; }

 private:
  void build_token_tables(const NetworkParams& params);

  Eigen::MatrixXd table_a_;  // width_1 x n
  Eigen::MatrixXd table_b_;  // width_1 x n
  std::vector<Eigen::MatrixXd> pre_;
  std::vector<Eigen::MatrixXd> act_;
  Eigen::MatrixXd logits_;
  Eigen::MatrixXd dz_;
  Eigen::MatrixXd dh_;
  Eigen::MatrixXd dh_prev_;
  Eigen::MatrixXd grad_table_a_;
  Eigen::MatrixXd grad_table_b_;
};

}  // namespace acrt::detail
