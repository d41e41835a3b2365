#pragma once

// Fourier analysis and sinusoid least-squares fitting of neuron activation
// grids over Z_n x Z_n.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "acrt/modmath.hpp"

namespace acrt {

/// Neurons whose max |preactivation| over the dataset is below this are dead.
inline constexpr double kDeadThreshold = 0.01;

/// Pre-rectifier values of one neuron over all input pairs; entry (a, b).
struct ActivationGrid {
  std::int64_t n = 0;
  Eigen::MatrixXd values;
  int layer = 0;
  int neuron = 0;

  /// Checks the grid is n x n and finite.
  void validate() const;
  double max_abs() const { return values.cwiseAbs().maxCoeff(); }
  bool is_dead() const { return max_abs() < kDeadThreshold; }
};

/// One-sided amplitude spectrum, indices 0..floor(n/2). Scaled so that
/// A cos(2 pi f x / n + phi) has magnitude |A| at index f.
struct Spectrum {
  std::vector<double> magnitudes;

  std::size_t size() const { return magnitudes.size(); }
  double operator[](std::size_t k) const { return magnitudes[k]; }
  /// Mean of x^2 over the signal, recovered from the spectrum (Parseval).
  double mean_power(std::int64_t n) const;
};

Spectrum dft_1d(std::span<const double> signal);

/// Spectra along the a-axis and b-axis, each averaging |DFT| over the other axis.
std::pair<Spectrum, Spectrum> grid_spectrum(const ActivationGrid& grid);

/// Argmax over f >= 1 of the summed axis spectra, ties toward the smaller f.
/// nullopt when the grid is dead.
std::optional<int> dominant_frequency(const ActivationGrid& grid);

/// The k strongest frequencies >= 1 in decreasing order of summed axis power.
std::vector<int> top_frequencies(const ActivationGrid& grid, int k);

enum class FitFamily {
  FirstOrder,   // alpha_A cos(2 pi f a / n - phi_A) + alpha_B cos(2 pi f b / n - phi_B)
  SumOfSines,   // first-order terms summed over several frequencies
  SecondOrder,  // alpha cos(2 pi f (a + b) / n - phi)
  Mixed,        // first- and second-order terms over a shared frequency list
  Constant,     // bias only; used for destructive controls
};

const char* to_string(FitFamily family);
FitFamily fit_family_from_string(const std::string& name);

/// Least-squares sinusoid fit of a grid.
///
/// Layout of `amplitudes` / `phases`: for each frequency of a first-order
/// term, the a-axis entry then the b-axis entry; then, for Mixed and
/// SecondOrder, one (a + b) entry per frequency. Phases are radians, so the
/// shift s_A of the simple-neuron form is phi_A n / (2 pi f).
struct SinusoidFit {
  FitFamily family = FitFamily::FirstOrder;
  std::int64_t n = 0;
  std::vector<int> frequencies;
  std::vector<double> phases;
  std::vector<double> amplitudes;
  double bias = 0.0;
  double r2 = 0.0;

  double evaluate(std::int64_t a, std::int64_t b) const;
  Eigen::MatrixXd render() const;
};

/// Design matrix for one (n, family, frequencies); reusable across many grids.
class SinusoidDesign {
 public:
  SinusoidDesign(std::int64_t n, FitFamily family, std::vector<int> frequencies);

  /// Throws std::domain_error for a constant grid (R^2 undefined).
  SinusoidFit fit(const Eigen::MatrixXd& grid) const;

  std::int64_t n() const { return n_; }

 private:
  struct Column {
    enum class Kind { Bias, CosA, SinA, CosB, SinB, CosSum, SinSum } kind;
    int frequency;
  };

  std::int64_t n_;
  FitFamily family_;
  std::vector<int> frequencies_;
  std::vector<Column> columns_;
  Eigen::MatrixXd design_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

SinusoidFit fit_sinusoid(const ActivationGrid& grid, FitFamily family,
                         std::span<const int> frequencies);

double r_squared(std::span<const double> predicted, std::span<const double> actual);

/// Applies the unit lift of the step size to both axes: out(x, y) = grid(u x, u y).
ActivationGrid remap_grid(const ActivationGrid& grid, const FrequencyClass& fc);
ActivationGrid inverse_remap_grid(const ActivationGrid& grid, const FrequencyClass& fc);

}  // namespace acrt
