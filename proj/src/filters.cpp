#include "wavenet/filters.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "wavenet/error.hpp"

namespace wavenet {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

void require_finite(WaveletParams p) {
  if (!std::isfinite(p.alpha) || !std::isfinite(p.beta)) {
    throw Error(ErrorKind::InvalidParameter,
                "wavelet angles must be finite (alpha=" + std::to_string(p.alpha) +
                    ", beta=" + std::to_string(p.beta) + ")");
  }
}

Taps lowpass_taps(WaveletParams p) {
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  const double cb = std::cos(p.beta), sb = std::sin(p.beta);
  const double cd = std::cos(p.alpha - p.beta), sd = std::sin(p.alpha - p.beta);

  Taps h{};
  h[0] = ((1.0 + ca + sa) * (1.0 - cb - sb) + 2.0 * sb * ca) / (4.0 * kSqrt2);
  h[1] = ((1.0 - ca + sa) * (1.0 + cb - sb) - 2.0 * sb * ca) / (4.0 * kSqrt2);
  h[2] = (1.0 + cd + sd) / (2.0 * kSqrt2);
  h[3] = (1.0 + cd - sd) / (2.0 * kSqrt2);
  h[4] = kInvSqrt2 - h[0] - h[2];
  h[5] = kInvSqrt2 - h[1] - h[3];
  return h;
}

double distance(const Taps& a, const Taps& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kTaps; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Levenberg-Marquardt on the 2-parameter residual r(p) = h(p) - target.
FitResult refine(const Taps& target, WaveletParams start) {
  WaveletParams p = start;
  Taps h = lowpass_taps(p);
  double cost = distance(h, target);
  double lambda = 1e-3;

  for (int iter = 0; iter < 200 && cost > 1e-15; ++iter) {
    const FilterGradients g = filter_gradients(p);
    // Normal equations J^T J dp = -J^T r.
    double jaa = 0.0, jab = 0.0, jbb = 0.0, ra = 0.0, rb = 0.0;
    for (std::size_t i = 0; i < kTaps; ++i) {
      const double r = h[i] - target[i];
      jaa += g.d_lowpass_d_alpha[i] * g.d_lowpass_d_alpha[i];
      jab += g.d_lowpass_d_alpha[i] * g.d_lowpass_d_beta[i];
      jbb += g.d_lowpass_d_beta[i] * g.d_lowpass_d_beta[i];
      ra += g.d_lowpass_d_alpha[i] * r;
      rb += g.d_lowpass_d_beta[i] * r;
    }

    bool improved = false;
    while (lambda < 1e12) {
      const double a11 = jaa * (1.0 + lambda) + 1e-15;
      const double a22 = jbb * (1.0 + lambda) + 1e-15;
      const double det = a11 * a22 - jab * jab;
      const double da = -(a22 * ra - jab * rb) / det;
      const double db = -(a11 * rb - jab * ra) / det;
      const WaveletParams trial{p.alpha + da, p.beta + db};
      const Taps ht = lowpass_taps(trial);
      const double ct = distance(ht, target);
      if (ct < cost) {
        p = trial;
        h = ht;
        cost = ct;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return {p, cost};
}

}  // namespace

Taps alternating_flip(const Taps& lowpass) {
  Taps g{};
  for (std::size_t n = 0; n < kTaps; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    g[n] = sign * lowpass[kTaps - 1 - n];
  }
  return g;
}

FilterPair make_filters(WaveletParams params) {
  require_finite(params);
  FilterPair f;
  f.lowpass = lowpass_taps(params);
  f.highpass = alternating_flip(f.lowpass);
  return f;
}

FilterGradients filter_gradients(WaveletParams params) {
  require_finite(params);
  const double ca = std::cos(params.alpha), sa = std::sin(params.alpha);
  const double cb = std::cos(params.beta), sb = std::sin(params.beta);
  const double cd = std::cos(params.alpha - params.beta);
  const double sd = std::sin(params.alpha - params.beta);
  constexpr double k4 = 1.0 / (4.0 * kSqrt2);
  constexpr double k2 = 1.0 / (2.0 * kSqrt2);

  FilterGradients g;
  Taps& da = g.d_lowpass_d_alpha;
  Taps& db = g.d_lowpass_d_beta;

  da[0] = ((ca - sa) * (1.0 - cb - sb) - 2.0 * sb * sa) * k4;
  db[0] = ((1.0 + ca + sa) * (sb - cb) + 2.0 * cb * ca) * k4;
  da[1] = ((sa + ca) * (1.0 + cb - sb) + 2.0 * sb * sa) * k4;
  db[1] = ((1.0 - ca + sa) * (-sb - cb) - 2.0 * cb * ca) * k4;
  da[2] = (cd - sd) * k2;
  db[2] = -da[2];
  da[3] = (-sd - cd) * k2;
  db[3] = -da[3];
  da[4] = -da[0] - da[2];
  db[4] = -db[0] - db[2];
  da[5] = -da[1] - da[3];
  db[5] = -db[1] - db[3];
  return g;
}

ConditionReport check_qmf(const FilterPair& filters, double tol) {
  if (!(tol > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "check_qmf tolerance must be positive");
  }
  const Taps& h = filters.lowpass;
  double sum = 0.0, norm = 0.0;
  for (double v : h) {
    sum += v;
    norm += v * v;
  }
  ConditionReport r;
  r.sum_residual = sum - kSqrt2;
  r.norm_residual = norm - 1.0;
  r.shift2_residual = h[0] * h[2] + h[2] * h[4] + h[1] * h[3] + h[3] * h[5];
  r.pass = std::abs(r.sum_residual) <= tol && std::abs(r.norm_residual) <= tol &&
           std::abs(r.shift2_residual) <= tol;
  return r;
}

FitResult fit_params_to_filter(const Taps& target, int restarts) {
  if (restarts < 1) {
    throw Error(ErrorKind::InvalidParameter, "fit_params_to_filter needs at least one restart");
  }
  for (double v : target) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::InvalidParameter, "fit target contains a non-finite tap");
    }
  }

  // Starting points follow the additive R2 low-discrepancy sequence over the torus.
  constexpr double kPlastic = 1.32471795724474602596;
  constexpr double kStepA = 1.0 / kPlastic;
  constexpr double kStepB = 1.0 / (kPlastic * kPlastic);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  FitResult best{{}, std::numeric_limits<double>::infinity()};
  for (int k = 0; k < restarts; ++k) {
    const double ua = std::fmod(0.5 + kStepA * k, 1.0);
    const double ub = std::fmod(0.5 + kStepB * k, 1.0);
    const FitResult r = refine(target, {kTwoPi * ua, kTwoPi * ub});
    if (r.residual < best.residual) best = r;
    if (best.residual < 1e-13) break;
  }

  if (!(best.residual <= 1e-4)) {
    throw NoFitError("no (alpha, beta) reproduces the target filter; best residual " +
                         std::to_string(best.residual),
                     best.residual);
  }
  return best;
}

}  // namespace wavenet
