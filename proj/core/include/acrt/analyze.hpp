#pragma once

// Interpretability passes over trained or constructed networks: clustering by
// dominant frequency, sinusoid fit tables, fit replacement, ablation, noise,
// logit decomposition, equivariance, scaling scans and coset histograms.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acrt/netcore.hpp"
#include "acrt/signal.hpp"
#include "acrt/train.hpp"

namespace acrt {

/// Share of the layer's outgoing weight norm a cluster needs to count as learned.
inline constexpr double kLearnedNormShare = 0.01;
/// r2 at or above which a neuron counts as well fit.
inline constexpr double kGoodFitR2 = 0.95;

struct NeuronCluster {
  int layer = 1;
  int frequency = 0;
  std::vector<int> members;
  double outgoing_norm = 0.0;  // sum of members' outgoing column norms
  double norm_share = 0.0;     // outgoing_norm / layer total
  bool learned = false;        // norm_share > kLearnedNormShare
};

/// Non-dead neurons grouped by dominant frequency, ascending frequency.
std::vector<NeuronCluster> cluster_neurons(const NetworkParams& params, int layer);

struct FrequencyCensus {
  std::vector<int> frequencies;               // distinct learned frequencies, ascending
  std::vector<std::vector<int>> per_layer;    // learned frequencies of each layer
  double norm_share_threshold = kLearnedNormShare;
};

FrequencyCensus frequency_census(const NetworkParams& params);
int unique_frequency_count(const NetworkParams& params);

struct FitRow {
  int neuron = 0;
  bool dead = false;
  std::optional<SinusoidFit> fit;  // empty for dead neurons
};

struct FitTable {
  int layer = 1;
  FitFamily family = FitFamily::FirstOrder;
  std::vector<int> candidates;  // frequencies offered to the fitter
  std::vector<FitRow> rows;
  double threshold = kGoodFitR2;
  double median_r2 = 0.0;       // over non-dead neurons
  double fraction_good = 0.0;   // non-dead neurons with r2 >= threshold
  int dead_count = 0;

  /// Recomputes the summary fields from rows.
  void summarize();
};

/// Layer 1 offers each neuron its top three spectral peaks; deeper layers offer
/// the learned layer-1 frequencies. Single-frequency families keep the best
/// candidate, multi-frequency families use all of them. A constant grid keeps
/// an exact constant fit with r2 = 0.
FitTable fit_layer(const NetworkParams& params, int layer, FitFamily family);

/// Copy whose layer preactivations come from the table's fits (dead neurons 0).
NetworkParams replace_with_fits(const NetworkParams& params, const FitTable& table);

/// Destructive control: each neuron replaced by its mean preactivation.
FitTable constant_fits(const NetworkParams& params, int layer);

/// Zeroes incoming weights, bias and outgoing weights of `count` members drawn
/// without replacement.
NetworkParams ablate_cluster(const NetworkParams& params, const NeuronCluster& cluster, int count,
                             std::uint64_t seed);

/// Multiplies each incoming and outgoing weight of every member by exp(s),
/// s ~ N(0, sigma). Biases are left alone.
NetworkParams inject_noise(const NetworkParams& params, const NeuronCluster& cluster, double sigma,
                           std::uint64_t seed);

/// Sum over members of relu(pre) * output column. Last hidden layer only.
Eigen::VectorXd cluster_logit_contribution(const NetworkParams& params, const NeuronCluster& cluster,
                                           Residue a, Residue b);

struct LogitDecomposition {
  std::vector<Eigen::VectorXd> clusters;  // same order as the input clusters
  Eigen::VectorXd remainder;              // dead and unclustered neurons
  Eigen::VectorXd logits;
};

LogitDecomposition decompose_logits(const NetworkParams& params,
                                    const std::vector<NeuronCluster>& clusters, Residue a, Residue b);

struct EquivarianceResult {
  int lag = 0;     // smallest lag maximizing the correlation
  int period = 0;  // smallest period of the correlation over lags (n if aperiodic)
  std::vector<double> correlation;

  /// True if the peak is at `expected` modulo the correlation's period.
  bool peaks_at(std::int64_t expected) const;
};

/// Circular cross-correlation, summed over all (a, b), of the mean-centred
/// contributions at (a, b) and (a + t, b + t).
EquivarianceResult equivariance_check(const NetworkParams& params, const NeuronCluster& cluster,
                                      std::int64_t t);

struct ScanRecord {
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  ModelKind kind = ModelKind::EmbedMlp;
  int depth = 1;
  int width = 0;
  int unique_frequency_count = 0;
  std::vector<int> frequencies;
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  double mean_margin = 0.0;
  int steps = 0;
  bool reached_target = false;
  bool flagged = false;  // excluded from fits
  std::string note;
};

struct LogFit {
  bool valid = false;
  std::string reason;  // set when invalid
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// count = a + b ln n by least squares. Needs three distinct moduli and
/// non-constant counts.
LogFit log_fit(const std::vector<double>& moduli, const std::vector<double>& counts);

struct ScanResult {
  std::vector<ScanRecord> records;  // ascending (n, seed)
  LogFit fit_means;                 // per-modulus mean count vs ln n
  LogFit fit_runs;                  // every unflagged run
  int excluded = 0;
};

struct ScanSpec {
  std::vector<std::int64_t> moduli;
  std::vector<std::uint64_t> seeds;
  ModelConfig model;    // n overwritten per run
  TrainConfig train;    // seed overwritten per run
  double split_fraction = 0.9;
  int jobs = 1;
};

/// One training run of a scan: dataset and init seeded by `seed`.
ScanRecord scan_run(const ScanSpec& spec, std::int64_t n, std::uint64_t seed,
                    TrainedModel* keep = nullptr);

/// Trains every (modulus, seed) pair and fits counts against ln n. Failed
/// runs are flagged and excluded, never raised.
ScanResult scaling_scan(const ScanSpec& spec);

struct FrequencyHistogram {
  std::int64_t n = 0;
  std::size_t models = 0;
  std::vector<int> counts;  // index f - 1 for f in [1, n/2]
  std::vector<int> divisor_frequencies;  // gcd(f, n) > 1
  double divisor_mean = 0.0;
  double nondivisor_mean = 0.0;
  double ratio = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.9;
  int bootstrap_samples = 0;
};

/// Counts of learned frequencies over unflagged records sharing one modulus,
/// plus the divisor / non-divisor mean ratio with a percentile bootstrap CI
/// over models. Throws on records of another modulus.
FrequencyHistogram frequency_histogram(std::int64_t n, const std::vector<ScanRecord>& records,
                                       std::uint64_t seed,
                                       double confidence = 0.9, int bootstrap_samples = 2000);

}  // namespace acrt
