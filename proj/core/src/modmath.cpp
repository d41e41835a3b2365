#include "acrt/modmath.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace acrt {

namespace {

std::int64_t floor_mod(std::int64_t x, std::int64_t q) {
  const auto r = x % q;
  return r < 0 ? r + q : r;
}

}  // namespace

Modulus::Modulus(std::int64_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("modulus must be >= 2, got " + std::to_string(n));
}

std::int64_t gcd(std::int64_t a, std::int64_t b) {
  if (a < 0 || b < 0) throw std::invalid_argument("gcd: arguments must be non-negative");
  if (a == 0 && b == 0) throw std::invalid_argument("gcd: both arguments are zero");
  while (b != 0) {
    const auto t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::optional<std::int64_t> mod_inverse(std::int64_t a, std::int64_t q) {
  if (q < 1) throw std::invalid_argument("mod_inverse: modulus must be >= 1");
  if (q == 1) return 0;
  // Extended Euclid on (a mod q, q).
  std::int64_t r0 = floor_mod(a, q), r1 = q;
  std::int64_t s0 = 1, s1 = 0;
  while (r1 != 0) {
    const auto quot = r0 / r1;
    std::tie(r0, r1) = std::make_pair(r1, r0 - quot * r1);
    std::tie(s0, s1) = std::make_pair(s1, s0 - quot * s1);
  }
  if (r0 != 1) return std::nullopt;
  return floor_mod(s0, q);
}

FrequencyClass frequency_class(std::int64_t f, Modulus modulus) {
  const auto n = modulus.value();
  if (f < 1 || f > n / 2) {
    throw std::invalid_argument("frequency " + std::to_string(f) + " outside [1, " +
                                std::to_string(n / 2) + "] for n=" + std::to_string(n));
  }
  FrequencyClass fc{};
  fc.f = f;
  fc.n = n;
  fc.g = gcd(f, n);
  fc.f_reduced = f / fc.g;
  fc.n_reduced = n / fc.g;
  fc.d = *mod_inverse(fc.f_reduced, fc.n_reduced);
  return fc;
}

std::int64_t cayley_distance(Residue x, Residue y, const FrequencyClass& fc) {
  const auto np = fc.n_reduced;
  // Steps m with m d = y - x (mod n'); since d^-1 = f', m = f' (y - x).
  const auto diff = floor_mod(y - x, np);
  const auto steps = floor_mod(diff * fc.f_reduced, np);
  return std::min(steps, np - steps);
}

std::vector<std::int64_t> CayleyGraphSpec::neighbours(std::int64_t v) const {
  const auto up = floor_mod(v + d, n_reduced);
  const auto down = floor_mod(v - d, n_reduced);
  if (up == down) return {up};
  return {down, up};
}

std::vector<std::vector<Residue>> cosets_of(std::int64_t q, Modulus modulus) {
  const auto n = modulus.value();
  if (q < 1 || n % q != 0) {
    throw std::invalid_argument("cosets_of: " + std::to_string(q) + " does not divide " +
                                std::to_string(n));
  }
  std::vector<std::vector<Residue>> sets(static_cast<std::size_t>(q));
  for (Residue x = 0; x < n; ++x) sets[static_cast<std::size_t>(x % q)].push_back(x);
  return sets;
}

bool ApproximateCoset::contains(Residue x) const {
  return std::find(elements.begin(), elements.end(), x) != elements.end();
}

ApproximateCoset approximate_coset(Residue c, const FrequencyClass& fc, std::int64_t k1,
                                   std::int64_t k2) {
  if (k1 < 0 || k2 < 0) throw std::invalid_argument("approximate_coset: k1, k2 must be >= 0");
  const auto n = fc.n;
  const auto np = fc.n_reduced;
  ApproximateCoset out{floor_mod(c, n), fc, k1, k2, {}, {}};
  const auto base = floor_mod(c, np);
  const auto count = std::min<std::int64_t>(k1 + k2 + 1, np);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto pos = i - k1;
    out.vertices.push_back(floor_mod(base + floor_mod(pos, np) * fc.d, np));
  }
  for (const auto v : out.vertices) {
    for (std::int64_t t = 0; t < fc.g; ++t) out.elements.push_back(v + t * np);
  }
  return out;
}

std::int64_t crt_solve(std::span<const Congruence> system) {
  if (system.empty()) throw std::invalid_argument("crt_solve: empty system");
  for (const auto& c : system) {
    if (c.modulus < 1) throw std::invalid_argument("crt_solve: moduli must be positive");
  }
  for (std::size_t i = 0; i < system.size(); ++i) {
    for (std::size_t j = i + 1; j < system.size(); ++j) {
      if (gcd(system[i].modulus, system[j].modulus) != 1) {
        throw std::invalid_argument("crt_solve: moduli " + std::to_string(system[i].modulus) +
                                    " and " + std::to_string(system[j].modulus) +
                                    " are not coprime");
      }
    }
  }
  // Incremental reconstruction: keep x mod M, then lift into x mod M q.
  std::int64_t x = 0, product = 1;
  for (const auto& c : system) {
    const auto q = c.modulus;
    const auto r = floor_mod(c.residue, q);
    const auto inv = *mod_inverse(floor_mod(product, q), q);
    const auto t = floor_mod((r - x) % q * inv, q);
    x += product * t;
    product *= q;
  }
  return floor_mod(x, product);
}

std::vector<double> remap(std::span<const double> values, const FrequencyClass& fc) {
  const auto np = fc.n_reduced;
  if (static_cast<std::int64_t>(values.size()) != np) {
    throw std::invalid_argument("remap: expected " + std::to_string(np) + " values, got " +
                                std::to_string(values.size()));
  }
  std::vector<double> out(values.size());
  for (std::int64_t x = 0; x < np; ++x) {
    out[static_cast<std::size_t>(x)] = values[static_cast<std::size_t>((fc.d * x) % np)];
  }
  return out;
}

std::vector<double> inverse_remap(std::span<const double> values, const FrequencyClass& fc) {
  const auto np = fc.n_reduced;
  if (static_cast<std::int64_t>(values.size()) != np) {
    throw std::invalid_argument("inverse_remap: expected " + std::to_string(np) + " values");
  }
  std::vector<double> out(values.size());
  for (std::int64_t x = 0; x < np; ++x) {
    out[static_cast<std::size_t>((fc.d * x) % np)] = values[static_cast<std::size_t>(x)];
  }
  return out;
}

std::int64_t lifted_step(const FrequencyClass& fc) {
  // Units mod n' always lift to units mod n; some d + t n' with t < g works.
  for (std::int64_t t = 0; t < fc.g; ++t) {
    const auto u = fc.d + t * fc.n_reduced;
    if (gcd(u, fc.n) == 1) return u;
  }
  throw std::logic_error("lifted_step: no unit lift found");
}

std::vector<std::pair<std::int64_t, int>> factorize(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("factorize: n must be positive");
  std::vector<std::pair<std::int64_t, int>> out;
  for (std::int64_t p = 2; p * p <= n; ++p) {
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e > 0) out.emplace_back(p, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

}  // namespace acrt
