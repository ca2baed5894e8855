#pragma once

// Two-angle parameterized length-6 orthogonal wavelet filters.
//
// The lowpass taps h(0..5) are closed-form trigonometric functions of the
// angles (alpha, beta). Every real pair maps to a filter satisfying
//   sum h = sqrt(2),  sum h^2 = 1,  h0 h2 + h2 h4 + h1 h3 + h3 h5 = 0,
// so the angles can be trained freely without projection. The highpass
// filter is the support-preserving alternating flip g(n) = (-1)^n h(5 - n).

#include <array>
#include <cstddef>

namespace wavenet {

inline constexpr std::size_t kTaps = 6;
using Taps = std::array<double, kTaps>;

struct WaveletParams {
  double alpha = 0.0;
  double beta = 0.0;
};

struct FilterPair {
  Taps lowpass{};
  Taps highpass{};
};

/// Partial derivatives of the lowpass taps. Highpass derivatives follow from
/// alternating_flip().
struct FilterGradients {
  Taps d_lowpass_d_alpha{};
  Taps d_lowpass_d_beta{};
};

struct ConditionReport {
  double sum_residual = 0.0;      // sum h - sqrt(2)
  double norm_residual = 0.0;     // sum h^2 - 1
  double shift2_residual = 0.0;   // h0 h2 + h2 h4 + h1 h3 + h3 h5
  bool pass = false;
};

struct FitResult {
  WaveletParams params;
  double residual = 0.0;  // Euclidean distance between fitted and target taps
};

/// g(n) = (-1)^n h(5 - n)
Taps alternating_flip(const Taps& lowpass);

/// Throws Error(InvalidParameter) for non-finite angles.
FilterPair make_filters(WaveletParams params);

FilterGradients filter_gradients(WaveletParams params);

/// Residuals of the three necessary conditions on the lowpass filter.
/// `tol` must be positive.
ConditionReport check_qmf(const FilterPair& filters, double tol);

/// Least-squares inversion of make_filters() by damped Gauss-Newton from a
/// grid of starting points. `restarts` is the number of starting points
/// (at least 1). Throws NoFitError when the best residual exceeds 1e-4.
FitResult fit_params_to_filter(const Taps& target, int restarts = 16);

}  // namespace wavenet
