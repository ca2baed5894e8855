#include "wavenet/transform.hpp"

#include <string>
#include <vector>

#include "wavenet/error.hpp"

namespace wavenet {

namespace {

// Circular read positions (2k + j) mod n for every output k and tap j.
std::vector<std::size_t> wrap_table(std::size_t n) {
  const std::size_t half = n / 2;
  std::vector<std::size_t> idx(half * kTaps);
  for (std::size_t k = 0; k < half; ++k) {
    for (std::size_t j = 0; j < kTaps; ++j) idx[k * kTaps + j] = (2 * k + j) % n;
  }
  return idx;
}

Plane pad_even(const Plane& x) {
  const std::size_t h = x.height() + (x.height() % 2);
  const std::size_t w = x.width() + (x.width() % 2);
  if (h == x.height() && w == x.width()) return x;
  Plane p(h, w);
  for (std::size_t r = 0; r < x.height(); ++r) {
    auto src = x.row(r);
    auto dst = p.row(r);
    for (std::size_t c = 0; c < x.width(); ++c) dst[c] = src[c];
  }
  return p;
}

// out(r, k) = sum_j f[j] x(r, (2k+j) mod W)
void row_analysis(const Plane& x, const Taps& lo, const Taps& hi, Plane& out_lo, Plane& out_hi) {
  const std::size_t w2 = x.width() / 2;
  const auto idx = wrap_table(x.width());
  out_lo = Plane(x.height(), w2);
  out_hi = Plane(x.height(), w2);
  for (std::size_t r = 0; r < x.height(); ++r) {
    auto in = x.row(r);
    auto lo_row = out_lo.row(r);
    auto hi_row = out_hi.row(r);
    for (std::size_t k = 0; k < w2; ++k) {
      const std::size_t* p = &idx[k * kTaps];
      double sl = 0.0, sh = 0.0;
      for (std::size_t j = 0; j < kTaps; ++j) {
        sl += lo[j] * in[p[j]];
        sh += hi[j] * in[p[j]];
      }
      lo_row[k] = sl;
      hi_row[k] = sh;
    }
  }
}

// out.row(k) = sum_j f[j] x.row((2k+j) mod H)
void col_analysis(const Plane& x, const Taps& f, Plane& out) {
  const std::size_t h2 = x.height() / 2;
  const auto idx = wrap_table(x.height());
  out = Plane(h2, x.width());
  for (std::size_t k = 0; k < h2; ++k) {
    auto dst = out.row(k);
    for (std::size_t j = 0; j < kTaps; ++j) {
      auto src = x.row(idx[k * kTaps + j]);
      const double fj = f[j];
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += fj * src[c];
    }
  }
}

// Transpose of col_analysis, accumulated into out (H x w).
void col_synthesis_add(const Plane& coeffs, const Taps& f, Plane& out) {
  const auto idx = wrap_table(out.height());
  for (std::size_t k = 0; k < coeffs.height(); ++k) {
    auto src = coeffs.row(k);
    for (std::size_t j = 0; j < kTaps; ++j) {
      auto dst = out.row(idx[k * kTaps + j]);
      const double fj = f[j];
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += fj * src[c];
    }
  }
}

// Transpose of row_analysis, accumulated into out (H x W).
void row_synthesis_add(const Plane& lo_coeffs, const Plane& hi_coeffs, const Taps& lo,
                       const Taps& hi, Plane& out) {
  const auto idx = wrap_table(out.width());
  for (std::size_t r = 0; r < out.height(); ++r) {
    auto cl = lo_coeffs.row(r);
    auto ch = hi_coeffs.row(r);
    auto dst = out.row(r);
    for (std::size_t k = 0; k < cl.size(); ++k) {
      const std::size_t* p = &idx[k * kTaps];
      for (std::size_t j = 0; j < kTaps; ++j) dst[p[j]] += lo[j] * cl[k] + hi[j] * ch[k];
    }
  }
}

// t[j] = sum_{r,k} grad(r,k) x(r, (2k+j) mod W)
void row_tap_corr(const Plane& grad, const Plane& x, Taps& t) {
  const auto idx = wrap_table(x.width());
  for (std::size_t r = 0; r < x.height(); ++r) {
    auto g = grad.row(r);
    auto in = x.row(r);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::size_t* p = &idx[k * kTaps];
      for (std::size_t j = 0; j < kTaps; ++j) t[j] += g[k] * in[p[j]];
    }
  }
}

// t[j] = sum_k <grad.row(k), x.row((2k+j) mod H)>
void col_tap_corr(const Plane& grad, const Plane& x, Taps& t) {
  const auto idx = wrap_table(x.height());
  for (std::size_t k = 0; k < grad.height(); ++k) {
    for (std::size_t j = 0; j < kTaps; ++j) t[j] += dot(grad.row(k), x.row(idx[k * kTaps + j]));
  }
}

void check_subbands(const Subbands& s, const char* what) {
  if (s.approx.empty() || !s.approx.same_shape(s.horiz) || !s.approx.same_shape(s.vert) ||
      !s.approx.same_shape(s.diag)) {
    throw Error(ErrorKind::Dimension, std::string(what) + ": subbands must be non-empty and share one shape");
  }
}

}  // namespace

Subbands dwt2_forward(const Plane& plane, const FilterPair& filters) {
  if (plane.empty()) throw Error(ErrorKind::Dimension, "dwt2_forward: empty plane");
  const Plane x = pad_even(plane);

  Plane rl, rh;
  row_analysis(x, filters.lowpass, filters.highpass, rl, rh);

  Subbands out;
  col_analysis(rl, filters.lowpass, out.approx);
  col_analysis(rl, filters.highpass, out.horiz);
  col_analysis(rh, filters.lowpass, out.vert);
  col_analysis(rh, filters.highpass, out.diag);
  return out;
}

Plane dwt2_inverse(const Subbands& subbands, const FilterPair& filters) {
  check_subbands(subbands, "dwt2_inverse");
  const std::size_t h = 2 * subbands.height();
  const std::size_t w = 2 * subbands.width();

  Plane rl(h, subbands.width());
  Plane rh(h, subbands.width());
  col_synthesis_add(subbands.approx, filters.lowpass, rl);
  col_synthesis_add(subbands.horiz, filters.highpass, rl);
  col_synthesis_add(subbands.vert, filters.lowpass, rh);
  col_synthesis_add(subbands.diag, filters.highpass, rh);

  Plane out(h, w);
  row_synthesis_add(rl, rh, filters.lowpass, filters.highpass, out);
  return out;
}

TapGradient dwt2_backward_taps(const Subbands& grad_out, const Plane& input,
                               const FilterPair& filters) {
  check_subbands(grad_out, "dwt2_backward");
  if (input.empty() || grad_out.height() != half_ceil(input.height()) ||
      grad_out.width() != half_ceil(input.width())) {
    throw Error(ErrorKind::Dimension,
                "dwt2_backward: gradient subbands " + std::to_string(grad_out.height()) + "x" +
                    std::to_string(grad_out.width()) + " do not match input " +
                    std::to_string(input.height()) + "x" + std::to_string(input.width()));
  }

  const Plane x = pad_even(input);
  Plane rl, rh;
  row_analysis(x, filters.lowpass, filters.highpass, rl, rh);

  Taps g_lo{}, g_hi{};
  col_tap_corr(grad_out.approx, rl, g_lo);
  col_tap_corr(grad_out.vert, rh, g_lo);
  col_tap_corr(grad_out.horiz, rl, g_hi);
  col_tap_corr(grad_out.diag, rh, g_hi);

  Plane ul(x.height(), grad_out.width());
  Plane uh(x.height(), grad_out.width());
  col_synthesis_add(grad_out.approx, filters.lowpass, ul);
  col_synthesis_add(grad_out.horiz, filters.highpass, ul);
  col_synthesis_add(grad_out.vert, filters.lowpass, uh);
  col_synthesis_add(grad_out.diag, filters.highpass, uh);

  row_tap_corr(ul, x, g_lo);
  row_tap_corr(uh, x, g_hi);

  Plane full(x.height(), x.width());
  row_synthesis_add(ul, uh, filters.lowpass, filters.highpass, full);

  TapGradient out;
  if (full.same_shape(input)) {
    out.grad_in = std::move(full);
  } else {
    out.grad_in = Plane(input.height(), input.width());
    for (std::size_t r = 0; r < input.height(); ++r) {
      auto src = full.row(r);
      auto dst = out.grad_in.row(r);
      for (std::size_t c = 0; c < input.width(); ++c) dst[c] = src[c];
    }
  }

  // g(n) = (-1)^n h(5-n), so dL/dh(m) picks up (-1)^(5-m) dL/dg(5-m).
  for (std::size_t m = 0; m < kTaps; ++m) {
    const std::size_t n = kTaps - 1 - m;
    out.grad_lowpass[m] = g_lo[m] + ((n % 2 == 0) ? g_hi[n] : -g_hi[n]);
  }
  return out;
}

TransformGradient dwt2_backward(const Subbands& grad_out, const Plane& input,
                                const FilterPair& filters, const FilterGradients& fgrads) {
  TapGradient tg = dwt2_backward_taps(grad_out, input, filters);
  TransformGradient out;
  out.grad_in = std::move(tg.grad_in);
  contract_taps(tg.grad_lowpass, fgrads, out.grad_alpha, out.grad_beta);
  return out;
}

}  // namespace wavenet
