#include "doctest.h"

#include <algorithm>
#include <numbers>
#include <set>

#include "acrt/modmath.hpp"
#include "oracle.hpp"

using namespace acrt;

TEST_CASE("gcd") {
  CHECK(gcd(11, 66) == 11);
  CHECK(gcd(11, 67) == 1);
  CHECK(gcd(12, 18) == 6);
  CHECK(gcd(0, 5) == 5);
  CHECK_THROWS_AS(gcd(0, 0), std::invalid_argument);
  for (std::int64_t a = 0; a <= 60; ++a) {
    for (std::int64_t b = 1; b <= 60; ++b) REQUIRE(gcd(a, b) == (a == 0 ? b : oracle::gcd(a, b)));
  }
}

TEST_CASE("mod_inverse") {
  CHECK(mod_inverse(3, 7) == 5);
  CHECK(mod_inverse(2, 6) == std::nullopt);
  for (std::int64_t q = 2; q <= 40; ++q) {
    CHECK(mod_inverse(1, q) == 1);
    for (std::int64_t a = -q; a < 2 * q; ++a) REQUIRE(mod_inverse(a, q) == oracle::inverse(a, q));
  }
  CHECK_THROWS(mod_inverse(3, 0));
}

TEST_CASE("frequency_class examples") {
  const auto a = frequency_class(2, Modulus(6));
  CHECK(a.g == 2);
  CHECK(a.n_reduced == 3);
  CHECK(a.d == 1);

  const auto b = frequency_class(11, Modulus(66));
  CHECK(b.g == 11);
  CHECK(b.n_reduced == 6);
  CHECK(b.d == 1);

  const auto c = frequency_class(11, Modulus(67));
  CHECK(c.g == 1);
  CHECK(c.n_reduced == 67);
  CHECK(c.d == 61);

  CHECK_THROWS(frequency_class(0, Modulus(10)));
  CHECK_THROWS(frequency_class(6, Modulus(10)));
  CHECK_THROWS(Modulus(1));
}

TEST_CASE("step size inverts the reduced frequency for every f, n <= 200") {
  for (std::int64_t n = 2; n <= 200; ++n) {
    for (std::int64_t f = 1; f <= n / 2; ++f) {
      const auto fc = frequency_class(f, Modulus(n));
      REQUIRE(fc.n_reduced * fc.g == n);
      REQUIRE((fc.f_reduced * fc.d) % fc.n_reduced == 1 % fc.n_reduced);
    }
  }
}

TEST_CASE("cayley_distance") {
  const auto f3 = frequency_class(3, Modulus(6));
  CHECK(cayley_distance(0, 3, f3) == 1);
  const auto f11 = frequency_class(11, Modulus(67));
  CHECK(cayley_distance(0, 61, f11) == 1);
  CHECK(cayley_distance(0, 61, f11) == oracle::bfs_distance(0, 61, 67, 61));
  CHECK(cayley_distance(17, 17, f11) == 0);
}

TEST_CASE("cayley_distance matches BFS and is a metric") {
  for (std::int64_t n : {7, 12, 30, 59, 66, 100}) {
    for (std::int64_t f = 1; f <= n / 2; ++f) {
      const auto fc = frequency_class(f, Modulus(n));
      const auto np = fc.n_reduced;
      for (std::int64_t x = 0; x < np; ++x) {
        for (std::int64_t y = 0; y < np; ++y) {
          const auto dxy = cayley_distance(x, y, fc);
          REQUIRE(dxy == oracle::bfs_distance(x, y, np, fc.d));
          REQUIRE(dxy == cayley_distance(y, x, fc));
          REQUIRE((dxy == 0) == (x == y));
        }
      }
      if (np > 40) continue;
      for (std::int64_t x = 0; x < np; ++x)
        for (std::int64_t y = 0; y < np; ++y)
          for (std::int64_t z = 0; z < np; ++z)
            REQUIRE(cayley_distance(x, z, fc) <= cayley_distance(x, y, fc) + cayley_distance(y, z, fc));
    }
  }
}

TEST_CASE("cayley graph neighbours are +-d") {
  const auto spec = CayleyGraphSpec::of(frequency_class(11, Modulus(67)));
  const auto nb = spec.neighbours(0);
  CHECK(nb == std::vector<std::int64_t>{6, 61});
  CHECK(CayleyGraphSpec{2, 1}.neighbours(0) == std::vector<std::int64_t>{1});
}

TEST_CASE("cosets_of") {
  using Sets = std::vector<std::vector<Residue>>;
  CHECK(cosets_of(3, Modulus(6)) == Sets{{0, 3}, {1, 4}, {2, 5}});
  CHECK(cosets_of(1, Modulus(6)) == Sets{{0, 1, 2, 3, 4, 5}});
  CHECK(cosets_of(4, Modulus(8)) == Sets{{0, 4}, {1, 5}, {2, 6}, {3, 7}});
  CHECK_THROWS(cosets_of(4, Modulus(6)));
}

TEST_CASE("approximate_coset examples") {
  auto sorted = [](std::vector<Residue> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto a = approximate_coset(0, frequency_class(3, Modulus(6)), 0, 0);
  CHECK(sorted(a.elements) == std::vector<Residue>{0, 2, 4});

  const auto b = approximate_coset(5, frequency_class(1, Modulus(12)), 1, 1);
  CHECK(b.elements == std::vector<Residue>{4, 5, 6});

  const auto c = approximate_coset(0, frequency_class(11, Modulus(67)), 1, 1);
  CHECK(c.elements == std::vector<Residue>{6, 0, 61});
  CHECK(c.contains(61));
  CHECK_FALSE(c.contains(1));
}

TEST_CASE("approximate_coset sizes and the zero-width case") {
  for (std::int64_t n : {6, 12, 30, 59, 66, 91}) {
    for (std::int64_t f = 1; f <= n / 2; ++f) {
      const auto fc = frequency_class(f, Modulus(n));
      for (Residue c = 0; c < n; c += 5) {
        for (std::int64_t k1 = 0; k1 <= 3; ++k1) {
          for (std::int64_t k2 = 0; k2 <= 3; ++k2) {
            const auto ac = approximate_coset(c, fc, k1, k2);
            const auto count = std::min(k1 + k2 + 1, fc.n_reduced);
            REQUIRE(static_cast<std::int64_t>(ac.vertices.size()) == count);
            REQUIRE(static_cast<std::int64_t>(ac.elements.size()) == count * fc.g);
            REQUIRE(std::set<Residue>(ac.elements.begin(), ac.elements.end()).size() == ac.elements.size());
            // Each element is within max(k1, k2) steps of the centre.
            for (const auto x : ac.elements) REQUIRE(cayley_distance(c, x, fc) <= std::max(k1, k2));
          }
        }
        const auto zero = approximate_coset(c, fc, 0, 0);
        auto elems = zero.elements;
        std::sort(elems.begin(), elems.end());
        if (fc.g > 1) {
          REQUIRE(elems == cosets_of(fc.n_reduced, Modulus(n))[static_cast<std::size_t>(c % fc.n_reduced)]);
        } else {
          REQUIRE(elems == std::vector<Residue>{c});
        }
      }
    }
  }
}

TEST_CASE("crt_solve") {
  const std::vector<Congruence> a{{3, 7}, {10, 13}};
  CHECK(crt_solve(a) == 10);
  const std::vector<Congruence> b{{0, 5}, {0, 9}};
  CHECK(crt_solve(b) == 0);
  const std::vector<Congruence> c{{2, 3}, {3, 5}};
  CHECK(crt_solve(c) == 8);
  CHECK(crt_solve(c) == oracle::crt_scan({{2, 3}, {3, 5}}));
  const std::vector<Congruence> bad{{1, 4}, {1, 6}};
  CHECK_THROWS(crt_solve(bad));
  CHECK_THROWS(crt_solve(std::vector<Congruence>{}));
}

TEST_CASE("crt_solve round-trips every prime-power factorization up to 10^4") {
  for (std::int64_t n = 2; n <= 10000; n += (n < 300 ? 1 : 97)) {
    std::vector<std::int64_t> qs;
    for (const auto& [p, e] : factorize(n)) {
      std::int64_t q = 1;
      for (int i = 0; i < e; ++i) q *= p;
      qs.push_back(q);
    }
    for (std::int64_t x = 0; x < n; ++x) {
      std::vector<Congruence> sys;
      for (const auto q : qs) sys.push_back({x % q, q});
      REQUIRE(crt_solve(sys) == x);
    }
  }
}

TEST_CASE("remap") {
  const auto fc1 = frequency_class(1, Modulus(9));
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(remap(v, fc1) == v);

  const auto fc = frequency_class(2, Modulus(5));
  REQUIRE(fc.d == 3);
  std::vector<double> samples(5), base(5);
  for (int x = 0; x < 5; ++x) {
    samples[x] = std::cos(2 * std::numbers::pi * 2 * x / 5);
    base[x] = std::cos(2 * std::numbers::pi * x / 5);
  }
  const auto out = remap(samples, fc);
  for (int x = 0; x < 5; ++x) CHECK(out[x] == doctest::Approx(base[x]).epsilon(1e-12));
  CHECK(inverse_remap(out, fc) == samples);
  CHECK_THROWS(remap(std::vector<double>(4), fc));
}

TEST_CASE("remap is a permutation") {
  for (std::int64_t n : {7, 12, 30, 59, 66}) {
    for (std::int64_t f = 1; f <= n / 2; ++f) {
      const auto fc = frequency_class(f, Modulus(n));
      std::vector<double> idx(static_cast<std::size_t>(fc.n_reduced));
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
      auto out = remap(idx, fc);
      REQUIRE(inverse_remap(out, fc) == idx);
      std::sort(out.begin(), out.end());
      REQUIRE(out == idx);
    }
  }
}

TEST_CASE("lifted_step is a unit acting as d on the reduced circle") {
  for (std::int64_t n : {12, 30, 66, 91, 120}) {
    for (std::int64_t f = 1; f <= n / 2; ++f) {
      const auto fc = frequency_class(f, Modulus(n));
      const auto u = lifted_step(fc);
      REQUIRE(gcd(u, n) == 1);
      REQUIRE(u % fc.n_reduced == fc.d % fc.n_reduced);
    }
  }
}

TEST_CASE("factorize") {
  using F = std::vector<std::pair<std::int64_t, int>>;
  CHECK(factorize(66) == F{{2, 1}, {3, 1}, {11, 1}});
  CHECK(factorize(120) == F{{2, 3}, {3, 1}, {5, 1}});
  CHECK(factorize(97) == F{{97, 1}});
}
