#pragma once

// Training-free networks: single cosine neurons and the exact coset
// construction for composite moduli.

#include <cstdint>
#include <vector>

#include "acrt/modmath.hpp"
#include "acrt/netcore.hpp"

namespace acrt {

struct PlanEntry {
  std::int64_t f;  // divides n
  std::int64_t q;  // n / f, a prime power
};

struct FrequencyPlan {
  std::int64_t n = 0;
  std::vector<PlanEntry> entries;  // ascending q's prime
  std::int64_t coverage = 1;       // product of q
  bool degenerate = false;         // n prime: one entry (1, n)

  bool complete() const { return coverage == n; }
  /// Number of hidden neurons build_acrt_network would create.
  std::int64_t neuron_count() const;
};

/// One entry (n / p^e, p^e) per prime power of n.
FrequencyPlan acrt_frequency_plan(Modulus n);

/// Width-1 one-hot network with
///   w(A_i) = cos(2 pi f (i - s_A) / n), w(B_j) = cos(2 pi f (j - s_B) / n),
///   w(D_k) = alpha cos(2 pi f (k - s_A - s_B) / n).
NetworkParams build_simple_neuron(std::int64_t f, Residue s_A, Residue s_B, double alpha, double bias,
                                  Modulus n);

/// Bias offset for the exact-coset neurons of modulus q: 0.1 (1 - cos(2 pi / q)).
double coset_epsilon(std::int64_t q);

/// q^2 neurons per plan entry, neuron (r, s) firing only when a = r and b = s
/// (mod q) and voting for the coset r + s (mod q). Throws on an incomplete plan.
NetworkParams build_acrt_network(const FrequencyPlan& plan);

/// Where a single hidden neuron fires and where its output row is positive.
struct NeuronSupport {
  std::vector<Residue> active_a;          // a with some b making the neuron active
  std::vector<Residue> active_b;
  std::vector<std::uint8_t> active_pairs;  // n * n, index a * n + b
  std::vector<Residue> positive_outputs;   // k with output weight > 0
};

/// Brute-force scan of one neuron of a depth-1 network.
NeuronSupport neuron_support(const NetworkParams& params, int neuron);

/// Largest m in [0, n'/2] with cos(2 pi m / n') > threshold, or -1 if none.
std::int64_t forced_band(std::int64_t n_reduced, double threshold);

/// Idealized decoder argmax_k sum_l cos(2 pi f_l (k - a - b) / n).
class FrequencyDecoder {
 public:
  FrequencyDecoder(std::int64_t n, std::vector<int> frequencies);

  std::int64_t n() const { return n_; }
  const std::vector<int>& frequencies() const { return freqs_; }
  /// Lowest index among maximal logits.
  Residue decode(Residue a, Residue b) const;
  /// Fraction of all n^2 pairs decoded correctly.
  double accuracy() const;

 private:
  std::int64_t n_;
  std::vector<int> freqs_;
  std::vector<double> h_;  // logits at a = b = 0, shifted for other pairs
};

/// m distinct frequencies uniform on [1, n/2].
FrequencyDecoder random_frequency_decoder(Modulus n, int m, std::uint64_t seed);

}  // namespace acrt
