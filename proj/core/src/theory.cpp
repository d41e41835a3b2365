#include "acrt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "acrt/rng.hpp"

namespace acrt {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::vector<double> cos_table(std::int64_t n) {
  std::vector<double> table(static_cast<std::size_t>(n));
  for (std::int64_t r = 0; r < n; ++r) {
    table[static_cast<std::size_t>(r)] = std::cos(2.0 * M_PI * static_cast<double>(r) / static_cast<double>(n));
  }
  return table;
}

std::int64_t floor_mod(std::int64_t x, std::int64_t q) {
  const auto r = x % q;
  return r < 0 ? r + q : r;
}

void check_freqs(std::span<const int> freqs, std::int64_t n) {
  Modulus{n};
  if (freqs.empty()) throw std::invalid_argument("frequency list is empty");
  for (const int f : freqs) {
    if (f < 1 || f >= n) throw std::invalid_argument("frequency " + std::to_string(f) + " outside [1, n)");
  }
}

// m - h(d) for every offset d = k - i - j, given a cosine table.
double margin_with_table(std::span<const int> freqs, std::int64_t n, const std::vector<double>& table) {
  const double m = static_cast<double>(freqs.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t d = 1; d < n; ++d) {
    CompensatedSum h;
    for (const int f : freqs) h.add(table[static_cast<std::size_t>((f * d) % n)]);
    best = std::min(best, m - h.value());
  }
  return best;
}

}  // namespace

std::vector<double> model_logits(std::span<const int> freqs, std::int64_t n, Residue i, Residue j) {
  check_freqs(freqs, n);
  const auto table = cos_table(n);
  std::vector<double> h(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const auto offset = floor_mod(k - i - j, n);
    CompensatedSum sum;
    for (const int f : freqs) sum.add(table[static_cast<std::size_t>((f * offset) % n)]);
    h[static_cast<std::size_t>(k)] = sum.value();
  }
  return h;
}

double min_margin(std::span<const int> freqs, std::int64_t n) {
  check_freqs(freqs, n);
  return margin_with_table(freqs, n, cos_table(n));
}

double delta_pi_over_e_cubed() { return M_PI / std::exp(3.0); }

double theorem_bound(std::int64_t n, double delta, double rho) {
  Modulus{n};
  if (!(delta < M_PI / M_E)) throw std::invalid_argument("delta >= pi/e makes the bound vacuous");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0, 1)");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0, 1)");
  const double ln_n = std::log(static_cast<double>(n));
  return (2.0 * ln_n - 2.0 * std::log(2.0 - 2.0 * rho)) / (std::log(M_PI / delta) - 1.0);
}

int theorem_min_frequencies(std::int64_t n, double delta, double rho) {
  return static_cast<int>(std::floor(theorem_bound(n, delta, rho))) + 1;
}

double softmax_incorrect_mass(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax_incorrect_mass: empty logits");
  const auto it = std::max_element(logits.begin(), logits.end());
  const double zmax = *it;
  const auto best = static_cast<std::size_t>(it - logits.begin());
  // Ratio of the off-argmax mass to the total, without 1 - p cancellation.
  double rest = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (!std::isfinite(logits[k])) throw std::invalid_argument("softmax_incorrect_mass: non-finite logit");
    if (k != best) rest += std::exp(logits[k] - zmax);
  }
  return rest / (1.0 + rest);
}

void TheoryParams::validate() const {
  Modulus{n};
  if (m < 1 || m > n / 2) {
    throw std::invalid_argument("m must be in [1, " + std::to_string(n / 2) + "]");
  }
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  theorem_bound(n, delta, rho);
}

MarginReport monte_carlo_margin(const TheoryParams& tp) {
  tp.validate();
  const auto table = cos_table(tp.n);
  const int half = static_cast<int>(tp.n / 2);
  const double threshold = tp.delta * static_cast<double>(tp.m);

  std::vector<double> margins(static_cast<std::size_t>(tp.trials));
  for (int t = 0; t < tp.trials; ++t) {
    Rng rng(derive_seed(tp.seed, static_cast<std::uint64_t>(t)));
    const auto freqs = rng.sample_without_replacement(1, half, tp.m);
    margins[static_cast<std::size_t>(t)] = margin_with_table(freqs, tp.n, table);
  }

  MarginReport r;
  r.trials = margins.size();
  r.successes = static_cast<std::size_t>(
      std::count_if(margins.begin(), margins.end(), [&](double x) { return x > threshold; }));
  r.empirical_success = static_cast<double>(r.successes) / static_cast<double>(r.trials);
  r.standard_error = std::sqrt(r.empirical_success * (1.0 - r.empirical_success) /
                               static_cast<double>(r.trials));
  r.bound = theorem_bound(tp.n, tp.delta, tp.rho);
  r.bound_m_min = theorem_min_frequencies(tp.n, tp.delta, tp.rho);

  std::vector<double> sorted = margins;
  std::sort(sorted.begin(), sorted.end());
  r.quantile_levels = {0.0, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 1.0};
  for (const double q : r.quantile_levels) {
    const auto idx = static_cast<std::size_t>(std::llround(q * static_cast<double>(sorted.size() - 1)));
    r.worst_margin_quantiles.push_back(sorted[idx]);
  }
  if (tp.keep_margins) r.per_trial_margins = std::move(margins);
  return r;
}

bool binomial_not_below(std::size_t successes, std::size_t trials, double p0, double confidence) {
  if (trials == 0) throw std::invalid_argument("binomial_not_below: zero trials");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("binomial_not_below: p0 must be in (0, 1)");
  // P(X <= successes | p0), summed in log space.
  const double nn = static_cast<double>(trials);
  const double lp = std::log(p0), lq = std::log1p(-p0);
  double cdf = 0.0;
  for (std::size_t k = 0; k <= successes; ++k) {
    const double kk = static_cast<double>(k);
    const double log_pmf = std::lgamma(nn + 1) - std::lgamma(kk + 1) - std::lgamma(nn - kk + 1) +
                           kk * lp + (nn - kk) * lq;
    cdf += std::exp(log_pmf);
  }
  return cdf >= 1.0 - confidence;
}

}  // namespace acrt
