#include "acrt/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "acrt/rng.hpp"
#include "acrt/theory.hpp"

namespace acrt {

namespace {

std::int64_t floor_mod(std::int64_t x, std::int64_t q) {
  const auto r = x % q;
  return r < 0 ? r + q : r;
}

// cos(2 pi r / n) computed from the reduced, folded fraction so every
// representation of the same angle yields the same double.
double cos_turns(std::int64_t r, std::int64_t n) {
  r = floor_mod(r, n);
  if (2 * r > n) r = n - r;
  if (r == 0) return 1.0;
  // Exact at the rational points, so sign tests on weights see true zeros.
  if (2 * r == n) return -1.0;
  if (4 * r == n) return 0.0;
  if (3 * r == n) return -0.5;
  if (6 * r == n) return 0.5;
  const auto g = gcd(r, n);
  return std::cos(2.0 * M_PI * static_cast<double>(r / g) / static_cast<double>(n / g));
}

NetworkParams empty_one_hot(std::int64_t n, int width) {
  NetworkParams p;
  p.kind = ModelKind::OneHotMlp;
  p.n = n;
  p.hidden.resize(1);
  p.hidden[0].weight = Eigen::MatrixXd::Zero(width, 2 * n);
  p.hidden[0].bias = Eigen::VectorXd::Zero(width);
  p.output = Eigen::MatrixXd::Zero(n, width);
  return p;
}

}  // namespace

std::int64_t FrequencyPlan::neuron_count() const {
  std::int64_t total = 0;
  for (const auto& e : entries) total += e.q * e.q;
  return total;
}

FrequencyPlan acrt_frequency_plan(Modulus n) {
  FrequencyPlan plan;
  plan.n = n.value();
  for (const auto& [p, e] : factorize(n.value())) {
    std::int64_t q = 1;
    for (int i = 0; i < e; ++i) q *= p;
    plan.entries.push_back({n.value() / q, q});
    plan.coverage *= q;
  }
  plan.degenerate = plan.entries.size() == 1 && plan.entries[0].f == 1;
  return plan;
}

NetworkParams build_simple_neuron(std::int64_t f, Residue s_A, Residue s_B, double alpha, double bias,
                                  Modulus modulus) {
  const auto n = modulus.value();
  if (f < 1 || f > n / 2) throw std::invalid_argument("simple neuron: f must be in [1, n/2]");
  if (!(alpha > 0.0)) throw std::invalid_argument("simple neuron: alpha must be positive");
  s_A = floor_mod(s_A, n);
  s_B = floor_mod(s_B, n);
  NetworkParams p = empty_one_hot(n, 1);
  for (std::int64_t i = 0; i < n; ++i) {
    p.hidden[0].weight(0, i) = cos_turns(f * (i - s_A), n);
    p.hidden[0].weight(0, n + i) = cos_turns(f * (i - s_B), n);
    p.output(i, 0) = alpha * cos_turns(f * (i - s_A - s_B), n);
  }
  p.hidden[0].bias(0) = bias;
  return p;
}

double coset_epsilon(std::int64_t q) {
  if (q < 2) throw std::invalid_argument("coset_epsilon: q must be >= 2");
  return 0.1 * (1.0 - std::cos(2.0 * M_PI / static_cast<double>(q)));
}

NetworkParams build_acrt_network(const FrequencyPlan& plan) {
  if (!plan.complete()) {
    throw std::invalid_argument("build_acrt_network: plan coverage " + std::to_string(plan.coverage) +
                                " does not equal n = " + std::to_string(plan.n));
  }
  const auto n = plan.n;
  NetworkParams p = empty_one_hot(n, static_cast<int>(plan.neuron_count()));
  auto& W = p.hidden[0].weight;
  // One offset for every entry, sized by the largest q, so every cluster's
  // output weights share a scale and none drops out of the census.
  std::int64_t q_max = 2;
  for (const auto& e : plan.entries) q_max = std::max(q_max, e.q);
  const double eps = coset_epsilon(q_max);
  int neuron = 0;
  for (const auto& [f, q] : plan.entries) {
    for (std::int64_t r = 0; r < q; ++r) {
      for (std::int64_t s = 0; s < q; ++s, ++neuron) {
        // cos(2 pi f (i - r) / n) = cos(2 pi (i - r) / q): peaks exactly on i = r (mod q).
        for (std::int64_t i = 0; i < n; ++i) {
          W(neuron, i) = cos_turns(f * (i - r), n);
          W(neuron, n + i) = cos_turns(f * (i - s), n);
        }
        p.hidden[0].bias(neuron) = -2.0 + eps;
        // Peak activation is eps, so each firing neuron adds exactly 1 to its coset.
        for (std::int64_t k = floor_mod(r + s, q); k < n; k += q) p.output(k, neuron) = 1.0 / eps;
      }
    }
  }
  return p;
}

NeuronSupport neuron_support(const NetworkParams& params, int neuron) {
  if (params.depth() != 1) throw std::invalid_argument("neuron_support: depth-1 networks only");
  if (neuron < 0 || neuron >= params.width(1)) throw std::out_of_range("neuron_support: bad neuron index");
  const auto n = params.n;
  const auto grids = activation_grids(params, 1);
  const auto& g = grids[static_cast<std::size_t>(neuron)].values;
  NeuronSupport out;
  out.active_pairs.assign(static_cast<std::size_t>(n * n), 0);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(n), 0), col(static_cast<std::size_t>(n), 0);
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) {
      if (g(a, b) > 0.0) {
        out.active_pairs[static_cast<std::size_t>(a * n + b)] = 1;
        row[static_cast<std::size_t>(a)] = 1;
        col[static_cast<std::size_t>(b)] = 1;
      }
    }
  }
  for (std::int64_t x = 0; x < n; ++x) {
    if (row[static_cast<std::size_t>(x)]) out.active_a.push_back(x);
    if (col[static_cast<std::size_t>(x)]) out.active_b.push_back(x);
    if (params.output(x, neuron) > 0.0) out.positive_outputs.push_back(x);
  }
  return out;
}

std::int64_t forced_band(std::int64_t n_reduced, double threshold) {
  if (n_reduced < 1) throw std::invalid_argument("forced_band: n' must be positive");
  std::int64_t k = -1;
  for (std::int64_t m = 0; 2 * m <= n_reduced; ++m) {
    if (cos_turns(m, n_reduced) > threshold) k = m;
  }
  return k;
}

FrequencyDecoder::FrequencyDecoder(std::int64_t n, std::vector<int> frequencies)
    : n_(n), freqs_(std::move(frequencies)) {
  h_ = model_logits(freqs_, n_, 0, 0);
}

Residue FrequencyDecoder::decode(Residue a, Residue b) const {
  // h depends on k - a - b only.
  const auto shift = floor_mod(a + b, n_);
  Residue best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < n_; ++k) {
    const double v = h_[static_cast<std::size_t>(floor_mod(k - shift, n_))];
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

double FrequencyDecoder::accuracy() const {
  // decode depends on (a + b) mod n only and every sum occurs for n pairs.
  std::int64_t correct_sums = 0;
  for (std::int64_t s = 0; s < n_; ++s) {
    if (decode(s, 0) == s) ++correct_sums;
  }
  return static_cast<double>(correct_sums) / static_cast<double>(n_);
}

FrequencyDecoder random_frequency_decoder(Modulus n, int m, std::uint64_t seed) {
  const int half = static_cast<int>(n.value() / 2);
  if (m < 1 || m > half) {
    throw std::invalid_argument("random_frequency_decoder: m must be in [1, " + std::to_string(half) + "]");
  }
  Rng rng(derive_seed(seed, 0xdec0));
  auto freqs = rng.sample_without_replacement(1, half, m);
  std::sort(freqs.begin(), freqs.end());
  return FrequencyDecoder(n.value(), std::move(freqs));
}

}  // namespace acrt
