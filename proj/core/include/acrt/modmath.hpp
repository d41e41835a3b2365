#pragma once

// Integer and cyclic-group primitives for C_n: step sizes, cosets, Cayley
// distances on circulant graphs, approximate cosets and CRT reconstruction.
// Residues crossing this API are always canonical, i.e. in [0, n).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace acrt {

using Residue = std::int64_t;

/// Order of the cyclic group C_n. Always at least 2.
class Modulus {
 public:
  explicit Modulus(std::int64_t n);

  std::int64_t value() const { return n_; }
  Residue canonical(std::int64_t x) const {
    const auto r = x % n_;
    return r < 0 ? r + n_ : r;
  }

  friend bool operator==(Modulus, Modulus) = default;

 private:
  std::int64_t n_;
};

/// Greatest common divisor of two non-negative integers; throws when both are 0.
std::int64_t gcd(std::int64_t a, std::int64_t b);

/// Inverse of a mod q in [0, q), or nullopt when gcd(a, q) > 1. q must be >= 1.
std::optional<std::int64_t> mod_inverse(std::int64_t a, std::int64_t q);

/// A frequency f in [1, n/2] together with its reduction by g = gcd(f, n).
/// The step size d is (f/g)^-1 mod (n/g); a frequency-f cosine reaches its
/// next-largest values by stepping d along the reduced circle C_{n/g}.
struct FrequencyClass {
  std::int64_t f;
  std::int64_t n;
  std::int64_t g;
  std::int64_t f_reduced;
  std::int64_t n_reduced;
  std::int64_t d;

  friend bool operator==(const FrequencyClass&, const FrequencyClass&) = default;
};

FrequencyClass frequency_class(std::int64_t f, Modulus n);

/// Number of +-d steps between x mod n' and y mod n' on the reduced circle.
std::int64_t cayley_distance(Residue x, Residue y, const FrequencyClass& fc);

/// The undirected circulant graph on n' vertices with connection set {+-d}.
struct CayleyGraphSpec {
  std::int64_t n_reduced;
  std::int64_t d;

  static CayleyGraphSpec of(const FrequencyClass& fc) { return {fc.n_reduced, fc.d}; }
  std::vector<std::int64_t> neighbours(std::int64_t v) const;
};

/// The q residue classes of C_n modulo q; set j holds {x : x mod q = j}.
std::vector<std::vector<Residue>> cosets_of(std::int64_t q, Modulus n);

struct ApproximateCoset {
  Residue center;
  FrequencyClass freq;
  std::int64_t k1;
  std::int64_t k2;
  // Path c - k1 d, ..., c + k2 d on C_{n'}, truncated at n' distinct vertices.
  std::vector<Residue> vertices;
  // Each vertex expanded to {v, v + n', v + 2n', ...} in C_n, in path order.
  std::vector<Residue> elements;

  bool contains(Residue x) const;
};

ApproximateCoset approximate_coset(Residue c, const FrequencyClass& fc, std::int64_t k1,
                                   std::int64_t k2);

struct Congruence {
  std::int64_t residue;
  std::int64_t modulus;
};

/// Unique x in [0, prod q_i) with x = r_i (mod q_i); moduli must be pairwise coprime.
std::int64_t crt_solve(std::span<const Congruence> system);

/// Frequency normalization on the reduced circle: out[x] = values[(d x) mod n'].
/// Samples of cos(2 pi f' x / n') come out as samples of cos(2 pi x / n').
std::vector<double> remap(std::span<const double> values, const FrequencyClass& fc);

/// Inverse permutation of remap.
std::vector<double> inverse_remap(std::span<const double> values, const FrequencyClass& fc);

/// A unit u of Z_n with u = d (mod n'). Multiplication by u permutes C_n and
/// acts as remap on every reduced coordinate.
std::int64_t lifted_step(const FrequencyClass& fc);

/// Factorization into (prime, exponent) pairs, ascending primes.
std::vector<std::pair<std::int64_t, int>> factorize(std::int64_t n);

}  // namespace acrt
