#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acrt/analyze.hpp"
#include "acrt/construct.hpp"
#include "acrt/modmath.hpp"
#include "oracle.hpp"

using namespace acrt;

namespace {

bool composite(std::int64_t n) {
  for (std::int64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) return true;
  return false;
}

double brute_accuracy(const NetworkParams& p) {
  const auto n = p.n;
  std::int64_t correct = 0;
  for (Residue a = 0; a < n; ++a) {
    for (Residue b = 0; b < n; ++b) {
      const auto logits = forward(p, a, b).logits;
      Eigen::Index arg = 0;
      logits.maxCoeff(&arg);
      // Ties count as wrong: the maximum must be unique.
      int hits = 0;
      for (Eigen::Index k = 0; k < n; ++k) hits += logits(k) == logits(arg);
      correct += hits == 1 && arg == (a + b) % n;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n * n);
}

}  // namespace

TEST_CASE("acrt_frequency_plan") {
  auto entries = [](std::int64_t n) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& e : acrt_frequency_plan(Modulus(n)).entries) out.emplace_back(e.f, e.q);
    return out;
  };
  using E = std::vector<std::pair<std::int64_t, std::int64_t>>;
  CHECK(entries(66) == E{{33, 2}, {22, 3}, {6, 11}});
  CHECK(entries(12) == E{{3, 4}, {4, 3}});
  CHECK(entries(91) == E{{13, 7}, {7, 13}});
  const auto prime = acrt_frequency_plan(Modulus(97));
  CHECK(prime.degenerate);
  CHECK(prime.entries.size() == 1);
  CHECK(prime.entries[0].f == 1);

  for (std::int64_t n = 2; n <= 400; ++n) {
    const auto plan = acrt_frequency_plan(Modulus(n));
    REQUIRE(plan.complete());
    REQUIRE(static_cast<double>(plan.entries.size()) <= std::log2(static_cast<double>(n)) + 1e-12);
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
      REQUIRE(n % plan.entries[i].f == 0);
      REQUIRE(plan.entries[i].f * plan.entries[i].q == n);
      for (std::size_t j = i + 1; j < plan.entries.size(); ++j)
        REQUIRE(oracle::gcd(plan.entries[i].q, plan.entries[j].q) == 1);
    }
  }
}

TEST_CASE("build_simple_neuron examples") {
  const auto p = build_simple_neuron(3, 0, 0, 1.0, -1.5, Modulus(6));
  const auto s = neuron_support(p, 0);
  CHECK(s.active_a == std::vector<Residue>{0, 2, 4});
  CHECK(s.active_b == std::vector<Residue>{0, 2, 4});
  for (Residue a = 0; a < 6; ++a)
    for (Residue b = 0; b < 6; ++b)
      CHECK(s.active_pairs[a * 6 + b] == (a % 2 == 0 && b % 2 == 0));

  for (const double bias : {-2.0, -2.5}) {
    const auto never = neuron_support(build_simple_neuron(5, 1, 2, 1.0, bias, Modulus(17)), 0);
    CHECK(never.active_a.empty());
  }

  const auto fc = frequency_class(11, Modulus(67));
  const auto k = forced_band(fc.n_reduced, 0.9);
  CHECK(k == 4);
  const auto band = approximate_coset(0, fc, k, k);
  const auto s67 = neuron_support(build_simple_neuron(11, 0, 0, 1.0, -1.9, Modulus(67)), 0);
  REQUIRE_FALSE(s67.active_a.empty());
  for (const auto x : s67.active_a) CHECK(band.contains(x));
  for (const auto x : s67.active_b) CHECK(band.contains(x));

  CHECK_THROWS(build_simple_neuron(0, 0, 0, 1.0, 0.0, Modulus(10)));
  CHECK_THROWS(build_simple_neuron(6, 0, 0, 1.0, 0.0, Modulus(10)));
  CHECK_THROWS(build_simple_neuron(2, 0, 0, 0.0, 0.0, Modulus(10)));
}

TEST_CASE("build_acrt_network examples") {
  const auto p12 = build_acrt_network(acrt_frequency_plan(Modulus(12)));
  CHECK(p12.width(1) == 25);
  CHECK(brute_accuracy(p12) == 1.0);

  const auto p66 = build_acrt_network(acrt_frequency_plan(Modulus(66)));
  CHECK(p66.width(1) == 134);
  CHECK(brute_accuracy(p66) == 1.0);

  const auto p6 = build_acrt_network(acrt_frequency_plan(Modulus(6)));
  Eigen::Index arg = 0;
  forward(p6, 1, 1).logits.maxCoeff(&arg);
  CHECK(arg == 2);

  FrequencyPlan partial{66, {{33, 2}, {22, 3}}, 6, false};
  CHECK_THROWS(build_acrt_network(partial));
}

TEST_CASE("construction is exact for every composite n <= 150") {
  for (std::int64_t n = 4; n <= 150; ++n) {
    if (!composite(n)) continue;
    const auto plan = acrt_frequency_plan(Modulus(n));
    const auto p = build_acrt_network(plan);
    const auto d = generate_dataset(Modulus(n), 1.0, 0);
    const auto acc = accuracy(p, d, Split::All);
    INFO("n = ", n);
    REQUIRE(acc.accuracy == 1.0);
    REQUIRE(acc.ties == 0);
    std::int64_t squares = 0;
    for (const auto& e : plan.entries) squares += e.q * e.q;
    REQUIRE(plan.neuron_count() == squares);
    REQUIRE(p.width(1) == squares);
  }
}

TEST_CASE("each constructed neuron fires on one coset pair and votes for one coset") {
  for (const std::int64_t n : {12, 30, 66}) {
    const auto plan = acrt_frequency_plan(Modulus(n));
    const auto p = build_acrt_network(plan);
    int neuron = 0;
    for (const auto& [f, q] : plan.entries) {
      for (std::int64_t r = 0; r < q; ++r) {
        for (std::int64_t s = 0; s < q; ++s, ++neuron) {
          const auto sup = neuron_support(p, neuron);
          const auto cos_a = cosets_of(q, Modulus(n))[static_cast<std::size_t>(r)];
          const auto cos_b = cosets_of(q, Modulus(n))[static_cast<std::size_t>(s)];
          const auto out = cosets_of(q, Modulus(n))[static_cast<std::size_t>((r + s) % q)];
          REQUIRE(sup.active_a == cos_a);
          REQUIRE(sup.active_b == cos_b);
          REQUIRE(sup.positive_outputs == out);
          for (Residue a = 0; a < n; ++a)
            for (Residue b = 0; b < n; ++b)
              REQUIRE(sup.active_pairs[a * n + b] == (a % q == r && b % q == s));
        }
      }
    }
  }
}

TEST_CASE("constructed clusters follow the plan") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(66)));
  const auto clusters = cluster_neurons(p, 1);
  std::vector<int> freqs;
  for (const auto& c : clusters) freqs.push_back(c.frequency);
  CHECK(freqs == std::vector<int>{6, 22, 33});
  CHECK(unique_frequency_count(p) == 3);
}

TEST_CASE("forced_band") {
  CHECK(forced_band(12, 0.0) == 2);  // cos(2 pi 3 / 12) = 0 is not above
  CHECK(forced_band(12, 0.9) == 0);
  CHECK(forced_band(12, 1.0) == -1);
  CHECK(forced_band(2, -1.5) == 1);
  CHECK_THROWS(forced_band(0, 0.0));
}

TEST_CASE("simple neurons stay inside their forced band for n <= 40") {
  for (std::int64_t n = 2; n <= 40; ++n) {
    for (std::int64_t f = 1; f <= n / 2; ++f) {
      const auto fc = frequency_class(f, Modulus(n));
      for (const double bias : {-1.9, -1.5, -1.0}) {
        for (Residue sa = 0; sa < n; sa += 3) {
          const Residue sb = (2 * sa + 1) % n;
          const auto sup = neuron_support(build_simple_neuron(f, sa, sb, 1.0, bias, Modulus(n)), 0);
          const auto k_in = forced_band(fc.n_reduced, -bias - 1.0);
          const auto k_out = forced_band(fc.n_reduced, 0.0);
          const auto in_a = approximate_coset(sa, fc, k_in, k_in);
          const auto in_b = approximate_coset(sb, fc, k_in, k_in);
          const auto out = approximate_coset((sa + sb) % n, fc, k_out, k_out);
          for (const auto x : sup.active_a) REQUIRE(in_a.contains(x));
          for (const auto x : sup.active_b) REQUIRE(in_b.contains(x));
          for (const auto x : sup.positive_outputs) REQUIRE(out.contains(x));
        }
      }
    }
  }
}

TEST_CASE("random_frequency_decoder") {
  const auto d97 = random_frequency_decoder(Modulus(97), 5, 3);
  CHECK(d97.frequencies().size() == 5);
  CHECK(d97.accuracy() == 1.0);
  CHECK(std::is_sorted(d97.frequencies().begin(), d97.frequencies().end()));

  const FrequencyDecoder even(12, {2, 4});
  CHECK(even.accuracy() < 1.0);
  CHECK(even.decode(3, 3) == 0);  // 0 and 6 tie; lowest index wins
  const FrequencyDecoder mixed(12, {2, 3});
  CHECK(mixed.accuracy() == 1.0);

  CHECK_THROWS(random_frequency_decoder(Modulus(12), 0, 0));
  CHECK_THROWS(random_frequency_decoder(Modulus(12), 7, 0));
  CHECK(random_frequency_decoder(Modulus(12), 6, 0).frequencies() == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("decoder accuracy agrees with a pair-by-pair scan") {
  for (const std::int64_t n : {12, 15, 30}) {
    for (int f1 = 1; f1 <= n / 2; ++f1) {
      for (int f2 = f1 + 1; f2 <= n / 2; ++f2) {
        const FrequencyDecoder dec(n, {f1, f2});
        std::int64_t correct = 0;
        for (Residue a = 0; a < n; ++a)
          for (Residue b = 0; b < n; ++b) correct += dec.decode(a, b) == (a + b) % n;
        REQUIRE(dec.accuracy() == doctest::Approx(static_cast<double>(correct) / (n * n)));
        REQUIRE((dec.accuracy() == 1.0) == (std::gcd(std::gcd<std::int64_t>(n, f1), f2) == 1));
      }
    }
  }
}
