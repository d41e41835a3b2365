#include "acrt/analyze.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>

#include "acrt/modmath.hpp"
#include "acrt/rng.hpp"

namespace acrt {

namespace {

void check_layer(const NetworkParams& p, int layer) {
  if (layer < 1 || layer > p.depth()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " does not exist");
  }
}

// Weights leaving neuron j of `layer`: the next layer's column or the output column.
Eigen::MatrixXd& outgoing(NetworkParams& p, int layer) {
  return layer == p.depth() ? p.output : p.hidden[static_cast<std::size_t>(layer)].weight;
}
const Eigen::MatrixXd& outgoing(const NetworkParams& p, int layer) {
  return layer == p.depth() ? p.output : p.hidden[static_cast<std::size_t>(layer)].weight;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void check_cluster(const NetworkParams& p, const NeuronCluster& c) {
  check_layer(p, c.layer);
  const int width = p.width(c.layer);
  for (const int j : c.members) {
    if (j < 0 || j >= width) throw std::out_of_range("cluster member outside layer");
  }
}

// Post-rectifier activations of the last hidden layer for every pair, width x n^2.
Eigen::MatrixXd last_layer_activations(const NetworkParams& p) {
  const auto pairs = all_pairs(p.n);
  auto acts = forward_batch(p, pairs, true);
  return acts.preactivations.back().cwiseMax(0.0);
}

Eigen::MatrixXd cluster_contributions(const NetworkParams& p, const NeuronCluster& c) {
  check_cluster(p, c);
  if (c.layer != p.depth()) {
    throw std::invalid_argument("logit contributions are defined for the last hidden layer only");
  }
  const Eigen::MatrixXd act = last_layer_activations(p);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.n, act.cols());
  for (const int j : c.members) out.noalias() += p.output.col(j) * act.row(j);
  return out;
}

SinusoidFit constant_fit(const ActivationGrid& g) {
  SinusoidFit fit;
  fit.family = FitFamily::Constant;
  fit.n = g.n;
  fit.bias = g.values.mean();
  fit.r2 = 0.0;
  return fit;
}

}  // namespace

std::vector<NeuronCluster> cluster_neurons(const NetworkParams& params, int layer) {
  check_layer(params, layer);
  const auto grids = activation_grids(params, layer);
  const auto& out = outgoing(params, layer);
  double total = 0.0;
  for (Eigen::Index j = 0; j < out.cols(); ++j) total += out.col(j).norm();

  std::map<int, NeuronCluster> by_freq;
  for (const auto& g : grids) {
    const auto f = dominant_frequency(g);
    if (!f) continue;
    auto& c = by_freq[*f];
    c.layer = layer;
    c.frequency = *f;
    c.members.push_back(g.neuron);
    c.outgoing_norm += out.col(g.neuron).norm();
  }
  std::vector<NeuronCluster> clusters;
  for (auto& [f, c] : by_freq) {
    c.norm_share = total > 0.0 ? c.outgoing_norm / total : 0.0;
    c.learned = c.norm_share > kLearnedNormShare;
    clusters.push_back(std::move(c));
  }
  return clusters;
}

FrequencyCensus frequency_census(const NetworkParams& params) {
  FrequencyCensus census;
  std::set<int> all;
  for (int layer = 1; layer <= params.depth(); ++layer) {
    std::vector<int> learned;
    for (const auto& c : cluster_neurons(params, layer)) {
      if (c.learned) learned.push_back(c.frequency);
    }
    all.insert(learned.begin(), learned.end());
    census.per_layer.push_back(std::move(learned));
  }
  census.frequencies.assign(all.begin(), all.end());
  return census;
}

int unique_frequency_count(const NetworkParams& params) {
  return static_cast<int>(frequency_census(params).frequencies.size());
}

void FitTable::summarize() {
  std::vector<double> r2;
  dead_count = 0;
  for (const auto& row : rows) {
    if (row.dead) {
      ++dead_count;
    } else if (row.fit) {
      r2.push_back(row.fit->r2);
    }
  }
  median_r2 = median(r2);
  fraction_good = r2.empty() ? 0.0
                             : static_cast<double>(std::count_if(r2.begin(), r2.end(),
                                                                 [&](double x) { return x >= threshold; })) /
                                   static_cast<double>(r2.size());
}

FitTable fit_layer(const NetworkParams& params, int layer, FitFamily family) {
  check_layer(params, layer);
  FitTable table;
  table.layer = layer;
  table.family = family;
  const auto grids = activation_grids(params, layer);
  const bool single = family == FitFamily::FirstOrder || family == FitFamily::SecondOrder;

  // Learned layer-1 frequencies, or every layer-1 cluster if none passes the norm rule.
  std::vector<int> shared;
  if (layer > 1 || !single) {
    const auto clusters = cluster_neurons(params, 1);
    for (const auto& c : clusters) {
      if (c.learned) shared.push_back(c.frequency);
    }
    if (shared.empty()) {
      for (const auto& c : clusters) shared.push_back(c.frequency);
    }
  }
  table.candidates = shared;

  std::map<std::vector<int>, std::optional<SinusoidDesign>> designs;
  auto design_for = [&](std::vector<int> freqs) -> const SinusoidDesign* {
    auto it = designs.find(freqs);
    if (it == designs.end()) {
      std::optional<SinusoidDesign> d;
      try {
        d.emplace(params.n, family, freqs);
      } catch (const std::invalid_argument&) {
      }
      it = designs.emplace(std::move(freqs), std::move(d)).first;
    }
    return it->second ? &*it->second : nullptr;
  };

  for (const auto& g : grids) {
    FitRow row;
    row.neuron = g.neuron;
    row.dead = g.is_dead();
    if (!row.dead) {
      if (g.values.maxCoeff() - g.values.minCoeff() == 0.0) {
        row.fit = constant_fit(g);
      } else if (family == FitFamily::Constant) {
        row.fit = design_for({})->fit(g.values);
      } else {
        std::vector<int> cands = layer == 1 && single ? top_frequencies(g, 3) : shared;
        if (cands.empty()) cands = top_frequencies(g, 3);
        if (single) {
          for (const int f : cands) {
            const auto* d = design_for({f});
            if (!d) continue;
            auto fit = d->fit(g.values);
            if (!row.fit || fit.r2 > row.fit->r2) row.fit = std::move(fit);
          }
        } else if (const auto* d = design_for(cands)) {
          row.fit = d->fit(g.values);
        }
        if (!row.fit) row.fit = constant_fit(g);
      }
    }
    table.rows.push_back(std::move(row));
  }
  table.summarize();
  return table;
}

NetworkParams replace_with_fits(const NetworkParams& params, const FitTable& table) {
  check_layer(params, table.layer);
  const int width = params.width(table.layer);
  if (static_cast<int>(table.rows.size()) != width) {
    throw std::invalid_argument("fit table has " + std::to_string(table.rows.size()) + " rows for " +
                                std::to_string(width) + " neurons");
  }
  LayerOverride o;
  o.layer = table.layer;
  o.neurons.resize(static_cast<std::size_t>(width));
  for (const auto& row : table.rows) {
    if (row.neuron < 0 || row.neuron >= width) throw std::invalid_argument("fit row for unknown neuron");
    if (!row.dead) {
      if (!row.fit) throw std::invalid_argument("missing fit for neuron " + std::to_string(row.neuron));
      if (row.fit->n != params.n) throw std::invalid_argument("fit modulus does not match model");
      o.neurons[static_cast<std::size_t>(row.neuron)] = row.fit;
    }
  }
  NetworkParams out = params;
  std::erase_if(out.overrides, [&](const LayerOverride& x) { return x.layer == table.layer; });
  out.overrides.push_back(std::move(o));
  return out;
}

FitTable constant_fits(const NetworkParams& params, int layer) {
  check_layer(params, layer);
  FitTable table;
  table.layer = layer;
  table.family = FitFamily::Constant;
  for (const auto& g : activation_grids(params, layer)) {
    FitRow row;
    row.neuron = g.neuron;
    row.dead = g.is_dead();
    if (!row.dead) row.fit = constant_fit(g);
    table.rows.push_back(std::move(row));
  }
  table.summarize();
  return table;
}

NetworkParams ablate_cluster(const NetworkParams& params, const NeuronCluster& cluster, int count,
                             std::uint64_t seed) {
  check_cluster(params, cluster);
  const int size = static_cast<int>(cluster.members.size());
  if (count < 0 || count > size) {
    throw std::invalid_argument("ablate_cluster: count " + std::to_string(count) + " exceeds cluster size " +
                                std::to_string(size));
  }
  NetworkParams out = params;
  if (count == 0) return out;
  Rng rng(derive_seed(seed, 0xab1a));
  const auto picks = rng.sample_without_replacement(0, size - 1, count);
  auto& layer = out.hidden[static_cast<std::size_t>(cluster.layer - 1)];
  auto& next = outgoing(out, cluster.layer);
  for (const int i : picks) {
    const int j = cluster.members[static_cast<std::size_t>(i)];
    layer.weight.row(j).setZero();
    layer.bias(j) = 0.0;
    next.col(j).setZero();
  }
  return out;
}

NetworkParams inject_noise(const NetworkParams& params, const NeuronCluster& cluster, double sigma,
                           std::uint64_t seed) {
  check_cluster(params, cluster);
  if (!(sigma >= 0.0)) throw std::invalid_argument("inject_noise: sigma must be >= 0");
  NetworkParams out = params;
  if (sigma == 0.0) return out;
  Rng rng(derive_seed(seed, 0x401e));
  auto& W = out.hidden[static_cast<std::size_t>(cluster.layer - 1)].weight;
  auto& next = outgoing(out, cluster.layer);
  for (const int j : cluster.members) {
    for (Eigen::Index i = 0; i < W.cols(); ++i) W(j, i) *= std::exp(sigma * rng.normal());
    for (Eigen::Index k = 0; k < next.rows(); ++k) next(k, j) *= std::exp(sigma * rng.normal());
  }
  return out;
}

Eigen::VectorXd cluster_logit_contribution(const NetworkParams& params, const NeuronCluster& cluster,
                                           Residue a, Residue b) {
  return decompose_logits(params, {cluster}, a, b).clusters.front();
}

LogitDecomposition decompose_logits(const NetworkParams& params,
                                    const std::vector<NeuronCluster>& clusters, Residue a, Residue b) {
  for (const auto& c : clusters) {
    check_cluster(params, c);
    if (c.layer != params.depth()) {
      throw std::invalid_argument("logit contributions are defined for the last hidden layer only");
    }
  }
  const auto n = params.n;
  if (a < 0 || a >= n || b < 0 || b >= n) throw std::out_of_range("decompose_logits: input outside [0, n)");
  const auto fr = forward(params, a, b, true);
  const Eigen::VectorXd act = fr.preactivations.back().cwiseMax(0.0);

  LogitDecomposition d;
  d.logits = fr.logits;
  std::vector<std::uint8_t> used(static_cast<std::size_t>(act.size()), 0);
  for (const auto& c : clusters) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (const int j : c.members) {
      v += act(j) * params.output.col(j);
      used[static_cast<std::size_t>(j)] = 1;
    }
    d.clusters.push_back(std::move(v));
  }
  d.remainder = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < act.size(); ++j) {
    if (!used[static_cast<std::size_t>(j)]) d.remainder += act(j) * params.output.col(j);
  }
  return d;
}

bool EquivarianceResult::peaks_at(std::int64_t expected) const {
  if (period <= 0) return false;
  const auto r = ((expected - lag) % period + period) % period;
  return r == 0;
}

EquivarianceResult equivariance_check(const NetworkParams& params, const NeuronCluster& cluster,
                                      std::int64_t t) {
  const auto n = params.n;
  Eigen::MatrixXd C = cluster_contributions(params, cluster);
  C.rowwise() -= C.colwise().mean();
  const auto ts = ((t % n) + n) % n;

  std::vector<double> corr(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) {
      const auto p = a * n + b;
      const auto q = ((a + ts) % n) * n + (b + ts) % n;
      for (std::int64_t lag = 0; lag < n; ++lag) {
        double s = 0.0;
        for (std::int64_t k = 0; k < n; ++k) s += C(k, p) * C((k + lag) % n, q);
        corr[static_cast<std::size_t>(lag)] += s;
      }
    }
  }

  EquivarianceResult r;
  const double peak = *std::max_element(corr.begin(), corr.end());
  double scale = 0.0;
  for (const double c : corr) scale = std::max(scale, std::abs(c));
  const double tol = 1e-9 * std::max(scale, 1e-300);
  r.lag = static_cast<int>(std::find_if(corr.begin(), corr.end(), [&](double c) { return c >= peak - tol; }) -
                           corr.begin());
  r.period = static_cast<int>(n);
  for (std::int64_t p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool periodic = true;
    for (std::int64_t l = 0; l < n && periodic; ++l) {
      periodic = std::abs(corr[static_cast<std::size_t>(l)] - corr[static_cast<std::size_t>((l + p) % n)]) <= tol;
    }
    if (periodic) {
      r.period = static_cast<int>(p);
      break;
    }
  }
  r.correlation = std::move(corr);
  return r;
}

LogFit log_fit(const std::vector<double>& moduli, const std::vector<double>& counts) {
  LogFit fit;
  fit.points = static_cast<int>(moduli.size());
  if (moduli.size() != counts.size()) throw std::invalid_argument("log_fit: size mismatch");
  if (std::set<double>(moduli.begin(), moduli.end()).size() < 3) {
    fit.reason = "needs at least 3 distinct moduli";
    return fit;
  }
  const auto k = static_cast<Eigen::Index>(moduli.size());
  Eigen::MatrixXd X(k, 2);
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::log(moduli[static_cast<std::size_t>(i)]);
    y(i) = counts[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  fit.intercept = beta(0);
  fit.slope = beta(1);
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot == 0.0) {
    fit.reason = "counts are constant; r2 undefined";
    return fit;
  }
  fit.r2 = 1.0 - (y - X * beta).squaredNorm() / ss_tot;
  fit.valid = true;
  return fit;
}

ScanRecord scan_run(const ScanSpec& spec, std::int64_t n, std::uint64_t seed, TrainedModel* keep) {
  ScanRecord rec;
  rec.n = n;
  rec.seed = seed;
  rec.kind = spec.model.kind;
  rec.depth = spec.model.depth;
  rec.width = spec.model.width;
  ModelConfig mc = spec.model;
  mc.n = n;
  TrainConfig tc = spec.train;
  tc.seed = seed;
  try {
    const auto data = generate_dataset(Modulus{n}, spec.split_fraction, seed);
    auto model = train(mc, tc, data);
    const auto& last = model.history.back();
    rec.steps = model.steps;
    rec.reached_target = model.reached_target;
    rec.train_accuracy = last.train_accuracy;
    rec.test_accuracy = last.test_accuracy.value_or(last.train_accuracy);
    rec.mean_margin = last.mean_margin;
    const auto census = frequency_census(model.params);
    rec.frequencies = census.frequencies;
    rec.unique_frequency_count = static_cast<int>(census.frequencies.size());
    if (!model.reached_target) {
      rec.flagged = true;
      rec.note = "target accuracy not reached in " + std::to_string(model.steps) + " steps";
    }
    if (keep) *keep = std::move(model);
  } catch (const TrainingDiverged& e) {
    rec.flagged = true;
    rec.steps = e.step();
    rec.note = e.what();
  }
  return rec;
}

ScanResult scaling_scan(const ScanSpec& spec) {
  std::vector<std::int64_t> moduli = spec.moduli;
  std::sort(moduli.begin(), moduli.end());
  moduli.erase(std::unique(moduli.begin(), moduli.end()), moduli.end());
  std::vector<std::uint64_t> seeds = spec.seeds;
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::vector<std::pair<std::int64_t, std::uint64_t>> tasks;
  for (const auto n : moduli) {
    for (const auto s : seeds) tasks.emplace_back(n, s);
  }
  ScanResult result;
  result.records.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (auto i = next++; i < tasks.size() && !failed; i = next++) {
      try {
        result.records[i] = scan_run(spec, tasks[i].first, tasks[i].second);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, spec.jobs));
  if (jobs == 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < std::min(jobs, tasks.size()); ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> run_n, run_c, mean_n, mean_c;
  for (const auto n : moduli) {
    double sum = 0.0;
    int k = 0;
    for (const auto& r : result.records) {
      if (r.n != n) continue;
      if (r.flagged) {
        ++result.excluded;
        continue;
      }
      run_n.push_back(static_cast<double>(n));
      run_c.push_back(r.unique_frequency_count);
      sum += r.unique_frequency_count;
      ++k;
    }
    if (k > 0) {
      mean_n.push_back(static_cast<double>(n));
      mean_c.push_back(sum / k);
    }
  }
  result.fit_runs = log_fit(run_n, run_c);
  result.fit_means = log_fit(mean_n, mean_c);
  return result;
}

FrequencyHistogram frequency_histogram(std::int64_t n, const std::vector<ScanRecord>& records,
                                       std::uint64_t seed, double confidence, int bootstrap_samples) {
  Modulus{n};
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must be in (0, 1)");
  if (bootstrap_samples < 0) throw std::invalid_argument("bootstrap_samples must be >= 0");
  const int half = static_cast<int>(n / 2);
  FrequencyHistogram h;
  h.n = n;
  h.confidence = confidence;
  h.counts.assign(static_cast<std::size_t>(half), 0);
  std::vector<std::uint8_t> is_div(static_cast<std::size_t>(half), 0);
  for (int f = 1; f <= half; ++f) {
    if (gcd(f, n) > 1) {
      h.divisor_frequencies.push_back(f);
      is_div[static_cast<std::size_t>(f - 1)] = 1;
    }
  }
  const auto n_div = h.divisor_frequencies.size();
  const auto n_non = static_cast<std::size_t>(half) - n_div;

  // Per model: learned divisor and non-divisor frequency counts.
  std::vector<std::pair<int, int>> per_model;
  for (const auto& r : records) {
    if (r.n != n) throw std::invalid_argument("frequency_histogram: records mix moduli");
    if (r.flagged) continue;
    int d = 0, nd = 0;
    for (const int f : r.frequencies) {
      if (f < 1 || f > half) throw std::invalid_argument("frequency_histogram: frequency out of range");
      ++h.counts[static_cast<std::size_t>(f - 1)];
      (is_div[static_cast<std::size_t>(f - 1)] ? d : nd) += 1;
    }
    per_model.emplace_back(d, nd);
  }
  h.models = per_model.size();
  if (per_model.empty() || n_div == 0 || n_non == 0) return h;

  auto ratio_of = [&](double d_sum, double nd_sum, double models) {
    const double dm = d_sum / (models * static_cast<double>(n_div));
    const double nm = nd_sum / (models * static_cast<double>(n_non));
    return std::pair{dm, nm};
  };
  double d_sum = 0.0, nd_sum = 0.0;
  for (const auto& [d, nd] : per_model) {
    d_sum += d;
    nd_sum += nd;
  }
  const double models = static_cast<double>(per_model.size());
  std::tie(h.divisor_mean, h.nondivisor_mean) = ratio_of(d_sum, nd_sum, models);
  h.ratio = h.nondivisor_mean > 0.0 ? h.divisor_mean / h.nondivisor_mean
                                    : std::numeric_limits<double>::infinity();

  Rng rng(derive_seed(seed, 0xb007));
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(bootstrap_samples));
  for (int s = 0; s < bootstrap_samples; ++s) {
    double bd = 0.0, bnd = 0.0;
    for (std::size_t i = 0; i < per_model.size(); ++i) {
      const auto& [d, nd] = per_model[rng.uniform_index(per_model.size())];
      bd += d;
      bnd += nd;
    }
    const auto [dm, nm] = ratio_of(bd, bnd, models);
    ratios.push_back(nm > 0.0 ? dm / nm : std::numeric_limits<double>::infinity());
  }
  h.bootstrap_samples = bootstrap_samples;
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    const double tail = 0.5 * (1.0 - confidence);
    auto at = [&](double q) {
      const auto idx = static_cast<std::size_t>(
          std::clamp(std::floor(q * static_cast<double>(ratios.size())), 0.0,
                     static_cast<double>(ratios.size() - 1)));
      return ratios[idx];
    };
    h.ci_low = at(tail);
    h.ci_high = at(1.0 - tail);
  }
  return h;
}

}  // namespace acrt
