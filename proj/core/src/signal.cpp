#include "acrt/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace acrt {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// cos/sin of 2 pi r / n for r in [0, n); indices reduced exactly in integers.
struct Twiddles {
  std::vector<double> cos_table;
  std::vector<double> sin_table;

  explicit Twiddles(std::int64_t n) : cos_table(static_cast<std::size_t>(n)), sin_table(static_cast<std::size_t>(n)) {
    for (std::int64_t r = 0; r < n; ++r) {
      const double angle = kTwoPi * static_cast<double>(r) / static_cast<double>(n);
      cos_table[static_cast<std::size_t>(r)] = std::cos(angle);
      sin_table[static_cast<std::size_t>(r)] = std::sin(angle);
    }
  }
};

double fold_scale(std::int64_t k, std::int64_t n) {
  if (k == 0 || 2 * k == n) return 1.0 / static_cast<double>(n);
  return 2.0 / static_cast<double>(n);
}

// Rows k = 0..n/2 of the real DFT matrices.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dft_matrices(std::int64_t n) {
  const Twiddles tw(n);
  const auto half = n / 2;
  Eigen::MatrixXd c(half + 1, n), s(half + 1, n);
  for (std::int64_t k = 0; k <= half; ++k) {
    for (std::int64_t x = 0; x < n; ++x) {
      const auto r = static_cast<std::size_t>((k * x) % n);
      c(k, x) = tw.cos_table[r];
      s(k, x) = tw.sin_table[r];
    }
  }
  return {std::move(c), std::move(s)};
}

Spectrum axis_spectrum(const Eigen::MatrixXd& signals_by_column, std::int64_t n) {
  const auto [c, s] = dft_matrices(n);
  const Eigen::MatrixXd re = c * signals_by_column;
  const Eigen::MatrixXd im = s * signals_by_column;
  const Eigen::MatrixXd mag = (re.array().square() + im.array().square()).sqrt().matrix();
  Spectrum out;
  out.magnitudes.resize(static_cast<std::size_t>(n / 2 + 1));
  for (std::int64_t k = 0; k <= n / 2; ++k) {
    out.magnitudes[static_cast<std::size_t>(k)] = fold_scale(k, n) * mag.row(k).mean();
  }
  return out;
}

std::vector<double> summed_power(const ActivationGrid& grid) {
  const auto [sa, sb] = grid_spectrum(grid);
  std::vector<double> score(sa.size());
  for (std::size_t k = 0; k < sa.size(); ++k) score[k] = sa[k] + sb[k];
  return score;
}

bool nearly_equal(double x, double y, double scale) {
  return std::abs(x - y) <= 1e-9 * std::max(scale, 1e-300);
}

}  // namespace

void ActivationGrid::validate() const {
  if (n < 2) throw std::invalid_argument("ActivationGrid: n must be >= 2");
  if (values.rows() != n || values.cols() != n) {
    throw std::invalid_argument("ActivationGrid: expected " + std::to_string(n) + "x" +
                                std::to_string(n) + " values");
  }
  if (!values.allFinite()) throw std::invalid_argument("ActivationGrid: non-finite entry");
}

double Spectrum::mean_power(std::int64_t n) const {
  double total = 0.0;
  for (std::size_t k = 0; k < magnitudes.size(); ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    const double m = magnitudes[k];
    total += (kk == 0 || 2 * kk == n) ? m * m : 0.5 * m * m;
  }
  return total;
}

Spectrum dft_1d(std::span<const double> signal) {
  const auto n = static_cast<std::int64_t>(signal.size());
  if (n < 2) throw std::invalid_argument("dft_1d: signal length must be >= 2");
  const Twiddles tw(n);
  Spectrum out;
  out.magnitudes.resize(static_cast<std::size_t>(n / 2 + 1));
  for (std::int64_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::int64_t x = 0; x < n; ++x) {
      const auto r = static_cast<std::size_t>((k * x) % n);
      re += signal[static_cast<std::size_t>(x)] * tw.cos_table[r];
      im -= signal[static_cast<std::size_t>(x)] * tw.sin_table[r];
    }
    out.magnitudes[static_cast<std::size_t>(k)] = fold_scale(k, n) * std::hypot(re, im);
  }
  return out;
}

std::pair<Spectrum, Spectrum> grid_spectrum(const ActivationGrid& grid) {
  grid.validate();
  // Column b of values is the a-axis signal at that b.
  return {axis_spectrum(grid.values, grid.n), axis_spectrum(grid.values.transpose(), grid.n)};
}

std::optional<int> dominant_frequency(const ActivationGrid& grid) {
  if (grid.is_dead()) return std::nullopt;
  const auto top = top_frequencies(grid, 1);
  if (top.empty()) return std::nullopt;
  return top.front();
}

std::vector<int> top_frequencies(const ActivationGrid& grid, int k) {
  const auto score = summed_power(grid);
  std::vector<int> remaining(score.size() - 1);
  std::iota(remaining.begin(), remaining.end(), 1);
  const double scale = *std::max_element(score.begin() + 1, score.end());
  std::vector<int> out;
  // Repeated selection: the smallest frequency within tolerance of the best.
  while (static_cast<int>(out.size()) < k && !remaining.empty()) {
    double best = -1.0;
    for (const int f : remaining) best = std::max(best, score[static_cast<std::size_t>(f)]);
    auto it = std::find_if(remaining.begin(), remaining.end(), [&](int f) {
      return nearly_equal(score[static_cast<std::size_t>(f)], best, scale);
    });
    out.push_back(*it);
    remaining.erase(it);
  }
  return out;
}

const char* to_string(FitFamily family) {
  switch (family) {
    case FitFamily::FirstOrder: return "first_order";
    case FitFamily::SumOfSines: return "sum_of_sines";
    case FitFamily::SecondOrder: return "second_order";
    case FitFamily::Mixed: return "mixed";
    case FitFamily::Constant: return "constant";
  }
  return "unknown";
}

FitFamily fit_family_from_string(const std::string& name) {
  for (auto f : {FitFamily::FirstOrder, FitFamily::SumOfSines, FitFamily::SecondOrder,
                 FitFamily::Mixed, FitFamily::Constant}) {
    if (name == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown fit family '" + name + "'");
}

double SinusoidFit::evaluate(std::int64_t a, std::int64_t b) const {
  const double scale = kTwoPi / static_cast<double>(n);
  double value = bias;
  std::size_t slot = 0;
  const bool first = family == FitFamily::FirstOrder || family == FitFamily::SumOfSines ||
                     family == FitFamily::Mixed;
  const bool second = family == FitFamily::SecondOrder || family == FitFamily::Mixed;
  if (first) {
    for (const int f : frequencies) {
      value += amplitudes[slot] * std::cos(scale * static_cast<double>((f * a) % n) - phases[slot]);
      ++slot;
      value += amplitudes[slot] * std::cos(scale * static_cast<double>((f * b) % n) - phases[slot]);
      ++slot;
    }
  }
  if (second) {
    for (const int f : frequencies) {
      value += amplitudes[slot] *
               std::cos(scale * static_cast<double>((f * (a + b)) % n) - phases[slot]);
      ++slot;
    }
  }
  return value;
}

Eigen::MatrixXd SinusoidFit::render() const {
  Eigen::MatrixXd out(n, n);
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) out(a, b) = evaluate(a, b);
  }
  return out;
}

SinusoidDesign::SinusoidDesign(std::int64_t n, FitFamily family, std::vector<int> frequencies)
    : n_(n), family_(family), frequencies_(std::move(frequencies)) {
  if (n < 2) throw std::invalid_argument("SinusoidDesign: n must be >= 2");
  if (family_ == FitFamily::Constant) {
    frequencies_.clear();
  } else if (frequencies_.empty()) {
    throw std::invalid_argument("SinusoidDesign: frequency list is empty");
  }
  if (family_ == FitFamily::FirstOrder || family_ == FitFamily::SecondOrder) {
    if (frequencies_.size() != 1) {
      throw std::invalid_argument(std::string("SinusoidDesign: ") + to_string(family_) +
                                  " takes exactly one frequency");
    }
  }
  std::set<int> seen;
  for (const int f : frequencies_) {
    if (f < 1 || f > n / 2) {
      throw std::invalid_argument("SinusoidDesign: frequency " + std::to_string(f) +
                                  " outside [1, n/2]");
    }
    if (!seen.insert(f).second) {
      throw std::invalid_argument("SinusoidDesign: duplicate frequency " + std::to_string(f) +
                                  " makes the design singular");
    }
  }

  using K = Column::Kind;
  columns_.push_back({K::Bias, 0});
  const bool first = family_ == FitFamily::FirstOrder || family_ == FitFamily::SumOfSines ||
                     family_ == FitFamily::Mixed;
  const bool second = family_ == FitFamily::SecondOrder || family_ == FitFamily::Mixed;
  // sin(pi x) vanishes on integers, so the Nyquist frequency has no sine column.
  auto nyquist = [n](int f) { return 2 * static_cast<std::int64_t>(f) == n; };
  if (first) {
    for (const int f : frequencies_) {
      columns_.push_back({K::CosA, f});
      if (!nyquist(f)) columns_.push_back({K::SinA, f});
      columns_.push_back({K::CosB, f});
      if (!nyquist(f)) columns_.push_back({K::SinB, f});
    }
  }
  if (second) {
    for (const int f : frequencies_) {
      columns_.push_back({K::CosSum, f});
      if (!nyquist(f)) columns_.push_back({K::SinSum, f});
    }
  }

  const Twiddles tw(n);
  design_.resize(n * n, static_cast<Eigen::Index>(columns_.size()));
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) {
      const auto row = a * n + b;
      for (std::size_t j = 0; j < columns_.size(); ++j) {
        const auto f = static_cast<std::int64_t>(columns_[j].frequency);
        const auto ra = static_cast<std::size_t>((f * a) % n);
        const auto rb = static_cast<std::size_t>((f * b) % n);
        const auto rs = static_cast<std::size_t>((f * (a + b)) % n);
        double v = 1.0;
        switch (columns_[j].kind) {
          case K::Bias: v = 1.0; break;
          case K::CosA: v = tw.cos_table[ra]; break;
          case K::SinA: v = tw.sin_table[ra]; break;
          case K::CosB: v = tw.cos_table[rb]; break;
          case K::SinB: v = tw.sin_table[rb]; break;
          case K::CosSum: v = tw.cos_table[rs]; break;
          case K::SinSum: v = tw.sin_table[rs]; break;
        }
        design_(row, static_cast<Eigen::Index>(j)) = v;
      }
    }
  }
  qr_.compute(design_);
  if (qr_.rank() < static_cast<Eigen::Index>(columns_.size())) {
    throw std::invalid_argument("SinusoidDesign: singular design matrix");
  }
}

SinusoidFit SinusoidDesign::fit(const Eigen::MatrixXd& grid) const {
  if (grid.rows() != n_ || grid.cols() != n_) {
    throw std::invalid_argument("SinusoidDesign::fit: grid shape does not match n");
  }
  // Row-major flattening to match design rows a * n + b.
  Eigen::VectorXd y(n_ * n_);
  for (std::int64_t a = 0; a < n_; ++a) {
    for (std::int64_t b = 0; b < n_; ++b) y(a * n_ + b) = grid(a, b);
  }
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw std::domain_error("SinusoidDesign::fit: constant grid");

  const Eigen::VectorXd beta = qr_.solve(y);
  const double ss_res = (y - design_ * beta).squaredNorm();

  SinusoidFit out;
  out.family = family_;
  out.n = n_;
  out.frequencies = frequencies_;
  out.r2 = 1.0 - ss_res / ss_tot;

  using K = Column::Kind;
  // Collect (cos, sin) coefficient pairs per term in layout order.
  std::size_t j = 0;
  out.bias = beta(0);
  ++j;
  auto take_pair = [&](K cos_kind, K sin_kind) {
    double c = 0.0, s = 0.0;
    if (j < columns_.size() && columns_[j].kind == cos_kind) c = beta(static_cast<Eigen::Index>(j++));
    if (j < columns_.size() && columns_[j].kind == sin_kind) s = beta(static_cast<Eigen::Index>(j++));
    // c cos t + s sin t = alpha cos(t - phi)
    out.amplitudes.push_back(std::hypot(c, s));
    out.phases.push_back(std::atan2(s, c));
  };
  const bool first = family_ == FitFamily::FirstOrder || family_ == FitFamily::SumOfSines ||
                     family_ == FitFamily::Mixed;
  const bool second = family_ == FitFamily::SecondOrder || family_ == FitFamily::Mixed;
  if (first) {
    for (std::size_t i = 0; i < frequencies_.size(); ++i) {
      take_pair(K::CosA, K::SinA);
      take_pair(K::CosB, K::SinB);
    }
  }
  if (second) {
    for (std::size_t i = 0; i < frequencies_.size(); ++i) take_pair(K::CosSum, K::SinSum);
  }
  return out;
}

SinusoidFit fit_sinusoid(const ActivationGrid& grid, FitFamily family,
                         std::span<const int> frequencies) {
  grid.validate();
  const SinusoidDesign design(grid.n, family, {frequencies.begin(), frequencies.end()});
  return design.fit(grid.values);
}

double r_squared(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || actual.size() < 2) {
    throw std::invalid_argument("r_squared: need equal lengths >= 2");
  }
  const double mean =
      std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw std::domain_error("r_squared: actual values are constant");
  return 1.0 - ss_res / ss_tot;
}

namespace {

ActivationGrid permute_grid(const ActivationGrid& grid, std::int64_t unit) {
  grid.validate();
  ActivationGrid out = grid;
  const auto n = grid.n;
  for (std::int64_t x = 0; x < n; ++x) {
    for (std::int64_t y = 0; y < n; ++y) {
      out.values(x, y) = grid.values((unit * x) % n, (unit * y) % n);
    }
  }
  return out;
}

}  // namespace

ActivationGrid remap_grid(const ActivationGrid& grid, const FrequencyClass& fc) {
  if (fc.n != grid.n) throw std::invalid_argument("remap_grid: modulus mismatch");
  return permute_grid(grid, lifted_step(fc));
}

ActivationGrid inverse_remap_grid(const ActivationGrid& grid, const FrequencyClass& fc) {
  if (fc.n != grid.n) throw std::invalid_argument("inverse_remap_grid: modulus mismatch");
  return permute_grid(grid, *mod_inverse(lifted_step(fc), fc.n));
}

}  // namespace acrt
