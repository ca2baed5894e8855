#pragma once

// Single-level separable 2D DWT with periodic boundaries.
//
// Rows are filtered first (lowpass and highpass, decimated by 2), then the
// columns of each result. Output sample k of a 1D pass reads input samples
// 2k .. 2k+5 modulo the length. Odd heights or widths get one trailing zero
// row or column first, so each subband is ceil(h/2) x ceil(w/2).
//
//   A = rows low,  cols low      H = rows low,  cols high
//   V = rows high, cols low      D = rows high, cols high

#include <cstddef>

#include "wavenet/filters.hpp"
#include "wavenet/tensor.hpp"

namespace wavenet {

struct Subbands {
  Plane approx;
  Plane horiz;
  Plane vert;
  Plane diag;

  std::size_t height() const noexcept { return approx.height(); }
  std::size_t width() const noexcept { return approx.width(); }
};

struct TransformGradient {
  Plane grad_in;
  double grad_alpha = 0.0;
  double grad_beta = 0.0;
};

/// Gradient of a scalar loss with respect to the input plane and the six
/// lowpass taps (highpass contributions folded back through the flip).
struct TapGradient {
  Plane grad_in;
  Taps grad_lowpass{};
};

inline std::size_t half_ceil(std::size_t n) noexcept { return (n + 1) / 2; }

Subbands dwt2_forward(const Plane& plane, const FilterPair& filters);

/// Synthesis on the even (padded) grid: 2*h x 2*w for h x w subbands.
Plane dwt2_inverse(const Subbands& subbands, const FilterPair& filters);

/// Adjoint of dwt2_forward applied to grad_out, cropped to the input shape,
/// plus the gradient with respect to the lowpass taps.
TapGradient dwt2_backward_taps(const Subbands& grad_out, const Plane& input,
                               const FilterPair& filters);

TransformGradient dwt2_backward(const Subbands& grad_out, const Plane& input,
                                const FilterPair& filters, const FilterGradients& fgrads);

/// Contracts a lowpass-tap gradient with dh/dalpha and dh/dbeta.
inline void contract_taps(const Taps& grad_lowpass, const FilterGradients& fgrads,
                          double& grad_alpha, double& grad_beta) {
  for (std::size_t j = 0; j < kTaps; ++j) {
    grad_alpha += grad_lowpass[j] * fgrads.d_lowpass_d_alpha[j];
    grad_beta += grad_lowpass[j] * fgrads.d_lowpass_d_beta[j];
  }
}

}  // namespace wavenet
