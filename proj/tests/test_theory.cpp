#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "acrt/rng.hpp"
#include "acrt/theory.hpp"
#include "oracle.hpp"

using namespace acrt;

TEST_CASE("model_logits") {
  const std::vector<int> one{1};
  const auto h = model_logits(one, 4, 0, 0);
  REQUIRE(h.size() == 4);
  CHECK(h[0] == 1.0);
  CHECK(h[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(h[2] == -1.0);
  CHECK(h[3] == doctest::Approx(0.0).scale(1.0));

  const std::vector<int> freqs{35, 25, 8};
  for (Residue i = 0; i < 91; i += 7) {
    for (Residue j = 0; j < 91; j += 11) {
      const auto v = model_logits(freqs, 91, i, j);
      CHECK(v[static_cast<std::size_t>((i + j) % 91)] == 3.0);
      for (Residue k = 0; k < 91; ++k) {
        const auto offset = ((k - i - j) % 91 + 91) % 91;
        REQUIRE(v[static_cast<std::size_t>(k)] ==
                doctest::Approx(static_cast<double>(oracle::h_direct(freqs, 91, offset))).epsilon(1e-12).scale(1.0));
      }
    }
  }
  CHECK_THROWS(model_logits(std::vector<int>{}, 5, 0, 0));
}

TEST_CASE("model_logits is a circular shift of the origin vector") {
  const std::vector<int> freqs{3, 7, 10};
  const std::int64_t n = 29;
  const auto base = model_logits(freqs, n, 0, 0);
  for (Residue i = 0; i < n; ++i) {
    for (Residue j = 0; j < n; j += 4) {
      const auto v = model_logits(freqs, n, i, j);
      for (Residue k = 0; k < n; ++k)
        REQUIRE(v[static_cast<std::size_t>((k + i + j) % n)] == base[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("min_margin") {
  const std::vector<int> one{1};
  CHECK(min_margin(one, 4) == doctest::Approx(1.0));
  const std::vector<int> div{3};
  CHECK(min_margin(div, 12) == doctest::Approx(0.0).scale(1.0));

  // All of [1, 3] at n = 7: the Dirichlet kernel gives sum_{f=1}^{3} cos(2 pi f d / 7) = -1/2 for d != 0.
  const std::vector<int> all{1, 2, 3};
  double worst = 1e300;
  for (std::int64_t d = 1; d < 7; ++d) worst = std::min(worst, 3.0 - static_cast<double>(oracle::h_direct(all, 7, d)));
  CHECK(min_margin(all, 7) == doctest::Approx(worst).epsilon(1e-14));
  CHECK(min_margin(all, 7) == doctest::Approx(3.5).epsilon(1e-14));
}

TEST_CASE("theorem_bound") {
  const double d = delta_pi_over_e_cubed();
  CHECK(d == doctest::Approx(std::numbers::pi / std::exp(3.0)));
  CHECK(theorem_bound(91, d, 0.5) == doctest::Approx(std::log(91.0)).epsilon(1e-12));
  CHECK(theorem_bound(91, d, 0.5) == doctest::Approx(4.51).epsilon(2e-3));
  CHECK(theorem_bound(97, d, 0.5) == doctest::Approx(4.57).epsilon(2e-3));
  CHECK(theorem_min_frequencies(97, d, 0.5) == 5);
  CHECK(theorem_bound(200, d, 1e-12) == doctest::Approx(std::log(100.0)).epsilon(1e-10));

  CHECK_THROWS_WITH(theorem_bound(59, std::numbers::pi / std::numbers::e, 0.5),
                    doctest::Contains("vacuous"));
  CHECK_THROWS_WITH(theorem_bound(59, 1.2, 0.5), doctest::Contains("vacuous"));
  CHECK_THROWS(theorem_bound(59, 0.0, 0.5));
  CHECK_THROWS(theorem_bound(59, 0.1, 0.0));
  CHECK_THROWS(theorem_bound(59, 0.1, 1.0));

  double prev = 0;
  for (std::int64_t n = 2; n <= 2000; ++n) {
    const double b = theorem_bound(n, 0.2, 0.7);
    REQUIRE(b > prev);
    prev = b;
  }
}

TEST_CASE("softmax_incorrect_mass") {
  const std::vector<double> uniform(10, 3.0);
  CHECK(softmax_incorrect_mass(uniform) == doctest::Approx(0.9));

  const std::int64_t n = 59;
  std::vector<int> all(29);
  std::iota(all.begin(), all.end(), 1);
  CHECK(softmax_incorrect_mass(model_logits(all, n, 4, 9)) < 1e-6);

  std::vector<double> spike(n, 0.0);
  spike[17] = 10.0;
  const double r = (n - 1) * std::exp(-10.0);
  CHECK(softmax_incorrect_mass(spike) == doctest::Approx(r / (1 + r)).epsilon(1e-12));
}

TEST_CASE("monte_carlo_margin") {
  TheoryParams tp;
  tp.n = 97;
  tp.m = 5;
  tp.trials = 2000;
  tp.seed = 1;
  tp.keep_margins = true;
  const auto r = monte_carlo_margin(tp);
  CHECK(r.trials == 2000);
  CHECK(r.per_trial_margins.size() == 2000);
  CHECK(r.bound_m_min == 5);
  CHECK(r.empirical_success >= 0.5);
  CHECK(r.worst_margin_quantiles.size() == r.quantile_levels.size());
  CHECK(std::is_sorted(r.worst_margin_quantiles.begin(), r.worst_margin_quantiles.end()));

  // Trial t has its own stream.
  Rng rng(derive_seed(tp.seed, 7));
  const auto freqs = rng.sample_without_replacement(1, 48, 5);
  CHECK(r.per_trial_margins[7] == min_margin(freqs, 97));

  const auto again = monte_carlo_margin(tp);
  CHECK(again.per_trial_margins == r.per_trial_margins);

  tp.m = 1;
  const auto single = monte_carlo_margin(tp);
  CHECK(single.empirical_success < r.empirical_success - 0.2);

  TheoryParams all;
  all.n = 23;
  all.m = 11;
  all.trials = 50;
  all.keep_margins = true;
  const auto ra = monte_carlo_margin(all);
  for (const double x : ra.per_trial_margins) REQUIRE(x == ra.per_trial_margins.front());

  TheoryParams bad;
  bad.n = 10;
  bad.m = 6;
  CHECK_THROWS(monte_carlo_margin(bad));
  bad.m = 2;
  bad.trials = 0;
  CHECK_THROWS(monte_carlo_margin(bad));
}

TEST_CASE("success does not drop as m grows") {
  TheoryParams tp;
  tp.n = 59;
  tp.trials = 3000;
  double prev = 0, prev_se = 0;
  for (int m = 1; m <= 10; ++m) {
    tp.m = m;
    const auto r = monte_carlo_margin(tp);
    INFO("m = ", m);
    REQUIRE(r.empirical_success >= prev - 2 * std::max(prev_se, r.standard_error));
    prev = r.empirical_success;
    prev_se = r.standard_error;
  }
}

TEST_CASE("margin is positive exactly when the frequencies are coprime with n") {
  for (std::int64_t n = 2; n <= 60; ++n) {
    const int half = static_cast<int>(n / 2);
    auto check = [&](const std::vector<int>& f) {
      std::int64_t g = n;
      for (const int x : f) g = std::gcd<std::int64_t>(g, x);
      REQUIRE((min_margin(f, n) > 1e-9) == (g == 1));
    };
    for (int a = 1; a <= half; ++a) {
      check({a});
      for (int b = a + 1; b <= half; ++b) {
        check({a, b});
        for (int c = b + 1; c <= half; ++c) check({a, b, c});
      }
    }
  }
}

TEST_CASE("binomial_not_below") {
  CHECK(binomial_not_below(500, 1000, 0.5, 0.99));
  CHECK(binomial_not_below(470, 1000, 0.5, 0.99));
  CHECK_FALSE(binomial_not_below(400, 1000, 0.5, 0.99));
  // P(X <= 2 | n = 10, p = 1/2) = 56 / 1024 ~ 0.0547
  CHECK(binomial_not_below(2, 10, 0.5, 0.95));
  CHECK_FALSE(binomial_not_below(2, 10, 0.5, 0.94));
  CHECK_THROWS(binomial_not_below(0, 0, 0.5, 0.99));
}
