#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "acrt/analyze.hpp"
#include "acrt/construct.hpp"

using namespace acrt;

namespace {

constexpr double kTau = 2 * std::numbers::pi;

// Several simple neurons side by side in one depth-1 one-hot network.
NetworkParams simple_stack(std::int64_t n, const std::vector<std::tuple<int, Residue, Residue, double>>& neurons,
                           double bias) {
  NetworkParams p = build_simple_neuron(std::get<0>(neurons[0]), std::get<1>(neurons[0]), std::get<2>(neurons[0]),
                                         std::get<3>(neurons[0]), bias, Modulus(n));
  const auto width = static_cast<Eigen::Index>(neurons.size());
  DenseLayer layer{Eigen::MatrixXd(width, 2 * n), Eigen::VectorXd::Constant(width, bias)};
  Eigen::MatrixXd out(n, width);
  for (Eigen::Index j = 0; j < width; ++j) {
    const auto& [f, sa, sb, alpha] = neurons[static_cast<std::size_t>(j)];
    const auto one = build_simple_neuron(f, sa, sb, alpha, bias, Modulus(n));
    layer.weight.row(j) = one.hidden[0].weight.row(0);
    out.col(j) = one.output.col(0);
  }
  p.hidden[0] = layer;
  p.output = out;
  return p;
}

Dataset everything(std::int64_t n) { return generate_dataset(Modulus(n), 1.0, 0); }

}  // namespace

TEST_CASE("cluster_neurons on the construction") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(66)));
  const auto clusters = cluster_neurons(p, 1);
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[0].frequency == 6);
  CHECK(clusters[0].members.size() == 121);
  CHECK(clusters[1].frequency == 22);
  CHECK(clusters[1].members.size() == 9);
  CHECK(clusters[2].frequency == 33);
  CHECK(clusters[2].members.size() == 4);
  double share = 0;
  for (const auto& c : clusters) {
    CHECK(c.learned);
    share += c.norm_share;
  }
  CHECK(share == doctest::Approx(1.0));
  CHECK(unique_frequency_count(p) == 3);
  const auto census = frequency_census(p);
  CHECK(census.frequencies == std::vector<int>{6, 22, 33});
  CHECK(census.norm_share_threshold == kLearnedNormShare);

  CHECK(cluster_neurons(p.zeros_like(), 1).empty());
  CHECK_THROWS(cluster_neurons(p, 2));
}

TEST_CASE("the 1% norm rule drops faint clusters") {
  const auto p = simple_stack(31, {{3, 0, 0, 1.0}, {3, 4, 1, 1.0}, {7, 2, 2, 1.0}, {11, 0, 5, 1e-3}}, 0.0);
  const auto clusters = cluster_neurons(p, 1);
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[2].frequency == 11);
  CHECK_FALSE(clusters[2].learned);
  CHECK(frequency_census(p).frequencies == std::vector<int>{3, 7});
}

TEST_CASE("fit_layer on exact simple neurons") {
  const auto p = simple_stack(59, {{14, 2, 5, 1.0}, {3, 0, 7, 0.5}, {22, 9, 9, 2.0}}, -0.5);
  const auto table = fit_layer(p, 1, FitFamily::FirstOrder);
  REQUIRE(table.rows.size() == 3);
  for (const auto& row : table.rows) {
    REQUIRE(row.fit);
    CHECK(row.fit->r2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(table.rows[0].fit->frequencies == std::vector<int>{14});
  CHECK(table.fraction_good == 1.0);
  CHECK(table.dead_count == 0);

  const auto replaced = replace_with_fits(p, table);
  CHECK((all_logits(replaced) - all_logits(p)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(p.overrides.empty());

  auto broken = table;
  broken.rows.pop_back();
  CHECK_THROWS(replace_with_fits(p, broken));
  broken = table;
  broken.rows[1].fit.reset();
  CHECK_THROWS(replace_with_fits(p, broken));
}

TEST_CASE("fit_layer on the construction") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(30)));
  const auto table = fit_layer(p, 1, FitFamily::FirstOrder);
  for (const auto& row : table.rows) REQUIRE(row.fit->r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit summaries skip dead neurons") {
  auto p = simple_stack(23, {{2, 0, 0, 1.0}, {5, 1, 1, 1.0}, {9, 3, 4, 1.0}}, 0.0);
  p.hidden[0].weight.row(1).setZero();
  const auto table = fit_layer(p, 1, FitFamily::FirstOrder);
  CHECK(table.dead_count == 1);
  CHECK(table.rows[1].dead);
  CHECK_FALSE(table.rows[1].fit);
  CHECK(table.median_r2 == doctest::Approx(1.0));
  auto copy = table;
  copy.median_r2 = copy.fraction_good = 0;
  copy.summarize();
  CHECK(copy.median_r2 == table.median_r2);
  CHECK(copy.fraction_good == table.fraction_good);
}

TEST_CASE("deeper layers are fit over the layer-1 frequencies") {
  ModelConfig mc;
  mc.kind = ModelKind::OneHotMlp;
  mc.depth = 2;
  mc.width = 16;
  mc.n = 17;
  const auto p = init_model(mc, 4);
  const auto first = fit_layer(p, 2, FitFamily::FirstOrder);
  const auto mixed = fit_layer(p, 2, FitFamily::Mixed);
  CHECK(mixed.candidates == first.candidates);
  CHECK_FALSE(mixed.candidates.empty());
  for (std::size_t i = 0; i < mixed.rows.size(); ++i) {
    if (mixed.rows[i].dead) continue;
    REQUIRE(mixed.rows[i].fit->frequencies == mixed.candidates);
  }
  CHECK(mixed.median_r2 >= first.median_r2);
}

TEST_CASE("constant fits destroy accuracy") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(30)));
  const auto d = everything(30);
  REQUIRE(accuracy(p, d, Split::All).accuracy == 1.0);
  const auto flat = replace_with_fits(p, constant_fits(p, 1));
  CHECK(accuracy(flat, d, Split::All).accuracy <= 2.0 / 30);
}

TEST_CASE("ablate_cluster") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(66)));
  const auto clusters = cluster_neurons(p, 1);
  const auto d = everything(66);

  const auto same = ablate_cluster(p, clusters[1], 0, 5);
  CHECK(all_logits(same) == all_logits(p));

  const auto gone = ablate_cluster(p, clusters[1], static_cast<int>(clusters[1].members.size()), 5);
  for (Residue a = 0; a < 66; a += 13)
    for (Residue b = 0; b < 66; b += 7) CHECK(cluster_logit_contribution(gone, clusters[1], a, b).isZero());

  auto all = p;
  for (const auto& c : clusters) all = ablate_cluster(all, c, static_cast<int>(c.members.size()), 1);
  CHECK(accuracy(all, d, Split::All).accuracy <= 1.0 / 66 + 1e-12);

  CHECK(ablate_cluster(p, clusters[0], 10, 3).hidden[0].weight == ablate_cluster(p, clusters[0], 10, 3).hidden[0].weight);
  CHECK_THROWS(ablate_cluster(p, clusters[2], 5, 0));
}

TEST_CASE("inject_noise") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(30)));
  const auto clusters = cluster_neurons(p, 1);
  const auto& target = clusters[0];

  const auto zero = inject_noise(p, target, 0.0, 9);
  CHECK(zero.hidden[0].weight == p.hidden[0].weight);
  CHECK(zero.output == p.output);

  const auto noisy = inject_noise(p, target, 0.3, 9);
  std::vector<bool> member(static_cast<std::size_t>(p.width(1)), false);
  for (const int j : target.members) member[static_cast<std::size_t>(j)] = true;
  for (int j = 0; j < p.width(1); ++j) {
    if (member[static_cast<std::size_t>(j)]) continue;
    REQUIRE(noisy.hidden[0].weight.row(j) == p.hidden[0].weight.row(j));
    REQUIRE(noisy.output.col(j) == p.output.col(j));
  }
  CHECK(noisy.hidden[0].bias == p.hidden[0].bias);
  CHECK(noisy.hidden[0].weight != p.hidden[0].weight);
  // Multiplicative noise keeps signs and zeros.
  CHECK(((noisy.output.array() > 0) == (p.output.array() > 0)).all());
  CHECK(((noisy.output.array() == 0) == (p.output.array() == 0)).all());
  CHECK(inject_noise(p, target, 0.3, 9).output == noisy.output);
  CHECK_THROWS(inject_noise(p, target, -0.1, 9));
}

TEST_CASE("large noise breaks the construction") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(66)));
  const auto clusters = cluster_neurons(p, 1);
  const auto noisy = inject_noise(p, clusters[0], 2.0, 1);
  CHECK(accuracy(noisy, everything(66), Split::All).accuracy < 0.9);
}

TEST_CASE("logit decomposition is exact") {
  for (const std::int64_t n : {12, 66}) {
    auto p = build_acrt_network(acrt_frequency_plan(Modulus(n)));
    // Kill one neuron so the remainder is exercised with a dead entry.
    p.hidden[0].weight.row(0).setZero();
    p.hidden[0].bias(0) = 0.5;
    const auto clusters = cluster_neurons(p, 1);
    for (Residue a = 0; a < n; a += 5) {
      for (Residue b = 0; b < n; b += 3) {
        const auto d = decompose_logits(p, clusters, a, b);
        Eigen::VectorXd sum = d.remainder;
        for (const auto& c : d.clusters) sum += c;
        REQUIRE((sum - forward(p, a, b).logits).cwiseAbs().maxCoeff() < 1e-9);
        REQUIRE((d.logits - forward(p, a, b).logits).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
  const auto single = build_simple_neuron(4, 1, 2, 1.0, 0.0, Modulus(17));
  const auto cl = cluster_neurons(single, 1);
  REQUIRE(cl.size() == 1);
  CHECK((cluster_logit_contribution(single, cl[0], 3, 8) - forward(single, 3, 8).logits).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cluster contributions oscillate at the cluster frequency") {
  const auto p = simple_stack(41, {{6, 7, 19, 1.0}, {6, 10, 3, 1.0}, {6, 20, 30, 1.0}, {13, 7, 19, 1.0}}, 0.0);
  for (const auto& c : cluster_neurons(p, 1)) {
    const auto v = cluster_logit_contribution(p, c, 7, 19);
    std::vector<double> x(v.data(), v.data() + v.size());
    const auto s = dft_1d(x);
    const auto arg = std::max_element(s.magnitudes.begin() + 1, s.magnitudes.end()) - s.magnitudes.begin();
    CHECK(arg == c.frequency);
  }
}

TEST_CASE("equivariance on the construction") {
  const auto p = build_acrt_network(acrt_frequency_plan(Modulus(30)));
  for (const auto& c : cluster_neurons(p, 1)) {
    const auto zero = equivariance_check(p, c, 0);
    CHECK(zero.peaks_at(0));
    CHECK(zero.lag == 0);
    const auto two = equivariance_check(p, c, 2);
    INFO("cluster f = ", c.frequency, " lag ", two.lag, " period ", two.period);
    CHECK(two.peaks_at(4));
    CHECK(30 % two.period == 0);
  }
}

TEST_CASE("equivariance of a full-phase cluster") {
  // One neuron per phase pair (s_A, s_B): the summed contribution depends on
  // k - a - b only, so a shift by t moves it by exactly 2t.
  const std::int64_t n = 13;
  std::vector<std::tuple<int, Residue, Residue, double>> neurons;
  for (Residue sa = 0; sa < n; ++sa)
    for (Residue sb = 0; sb < n; ++sb) neurons.emplace_back(3, sa, sb, 1.0);
  const auto p = simple_stack(n, neurons, -0.5);
  const auto cl = cluster_neurons(p, 1);
  REQUIRE(cl.size() == 1);
  for (const std::int64_t t : {1, 2, 5}) {
    const auto r = equivariance_check(p, cl[0], t);
    CHECK(r.period == n);
    CHECK(r.lag == (2 * t) % n);
  }
}

TEST_CASE("log_fit") {
  const std::vector<double> n{31, 59, 97, 127};
  std::vector<double> c;
  for (const double x : n) c.push_back(1.5 + 2.0 * std::log(x));
  const auto f = log_fit(n, c);
  CHECK(f.valid);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.5));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.points == 4);

  const auto one = log_fit({59, 59, 59}, {3, 4, 5});
  CHECK_FALSE(one.valid);
  CHECK_FALSE(one.reason.empty());

  const auto flat = log_fit(n, {4, 4, 4, 4});
  CHECK_FALSE(flat.valid);
  CHECK(flat.slope == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS(log_fit(n, {1, 2}));
}

TEST_CASE("frequency_histogram") {
  const auto empty = frequency_histogram(66, {}, 0);
  CHECK(empty.counts.size() == 33);
  CHECK(std::all_of(empty.counts.begin(), empty.counts.end(), [](int x) { return x == 0; }));
  CHECK(empty.models == 0);
  CHECK(empty.divisor_frequencies.size() == 23);

  std::vector<ScanRecord> records;
  for (std::uint64_t s = 0; s < 40; ++s) {
    ScanRecord r;
    r.n = 66;
    r.seed = s;
    r.frequencies = {22, 33, static_cast<int>(1 + s % 33)};
    records.push_back(r);
  }
  ScanRecord flagged;
  flagged.n = 66;
  flagged.flagged = true;
  flagged.frequencies = {1, 5, 7};
  records.push_back(flagged);

  const auto h = frequency_histogram(66, records, 3, 0.9, 500);
  CHECK(h.models == 40);
  CHECK(h.counts[21] >= 40);
  CHECK(h.counts[32] >= 40);
  CHECK(h.ratio > 1.0);
  CHECK(h.ci_low > 1.0);
  CHECK(h.ci_low <= h.ratio);
  CHECK(h.ratio <= h.ci_high);
  CHECK(h.bootstrap_samples == 500);
  const auto again = frequency_histogram(66, records, 3, 0.9, 500);
  CHECK(again.ci_low == h.ci_low);

  records.back().n = 59;
  CHECK_THROWS(frequency_histogram(66, records, 3));
}

TEST_CASE("scaling_scan is independent of parallelism") {
  ScanSpec spec;
  spec.moduli = {11, 7, 13};
  spec.seeds = {1, 0};
  spec.model.kind = ModelKind::EmbedMlp;
  spec.model.width = 32;
  spec.model.embed_dim = 8;
  spec.train.max_steps = 200;
  spec.train.batch_size = 64;
  spec.train.eval_every = 50;
  spec.jobs = 1;
  const auto serial = scaling_scan(spec);
  spec.jobs = 3;
  const auto parallel = scaling_scan(spec);
  REQUIRE(serial.records.size() == 6);
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    const auto& a = serial.records[i];
    const auto& b = parallel.records[i];
    REQUIRE(a.n == b.n);
    REQUIRE(a.seed == b.seed);
    REQUIRE(a.frequencies == b.frequencies);
    REQUIRE(a.mean_margin == b.mean_margin);
    REQUIRE(a.flagged == b.flagged);
  }
  CHECK(serial.records[0].n == 7);
  CHECK(serial.records[0].seed == 0);
  CHECK(serial.records[5].n == 13);
  int flagged = 0;
  for (const auto& r : serial.records) {
    flagged += r.flagged;
    if (r.flagged) CHECK_FALSE(r.note.empty());
    CHECK(r.unique_frequency_count <= r.n / 2);
  }
  CHECK(serial.excluded == flagged);
}
