#pragma once

// Idealized multi-frequency logit model h(k) = sum_l cos(2 pi f_l (k - i - j) / n),
// its margin, the closed-form frequency-count bound and a Monte Carlo check
// of that bound.

#include <cstdint>
#include <span>
#include <vector>

#include "acrt/modmath.hpp"

namespace acrt {

std::vector<double> model_logits(std::span<const int> freqs, std::int64_t n, Residue i, Residue j);

/// min over k != i + j of (m - h(k)); translation invariant, so computed at i = j = 0.
double min_margin(std::span<const int> freqs, std::int64_t n);

/// (2 ln n - 2 ln(2 - 2 rho)) / (ln(pi / delta) - 1). Requires 0 < delta < min(1, pi / e)
/// and 0 < rho < 1.
double theorem_bound(std::int64_t n, double delta, double rho);

/// Smallest integer m strictly above theorem_bound.
int theorem_min_frequencies(std::int64_t n, double delta, double rho);

/// Largest incorrect softmax mass: 1 - softmax(logits)[argmax].
double softmax_incorrect_mass(std::span<const double> logits);

/// pi / e^3: the delta for which the bound at rho = 1/2 reduces to ln n.
double delta_pi_over_e_cubed();

struct TheoryParams {
  std::int64_t n = 97;
  int m = 5;
  double delta = delta_pi_over_e_cubed();
  double rho = 0.5;
  int trials = 10000;
  std::uint64_t seed = 0;
  bool keep_margins = false;

  void validate() const;
};

struct MarginReport {
  double empirical_success = 0.0;  // fraction of trials with min margin > delta m
  std::size_t successes = 0;
  std::size_t trials = 0;
  double standard_error = 0.0;
  double bound = 0.0;  // theorem_bound(n, delta, rho)
  int bound_m_min = 0;
  std::vector<double> quantile_levels;
  std::vector<double> worst_margin_quantiles;
  std::vector<double> per_trial_margins;  // filled when keep_margins
};

/// Trial t draws m distinct frequencies uniformly from [1, n/2] with its own
/// stream derive_seed(seed, t), so results do not depend on evaluation order.
MarginReport monte_carlo_margin(const TheoryParams& params);

/// One-sided exact binomial test: true unless the observed success count
/// rejects "success probability >= p0" at the given confidence level.
bool binomial_not_below(std::size_t successes, std::size_t trials, double p0, double confidence);

}  // namespace acrt
