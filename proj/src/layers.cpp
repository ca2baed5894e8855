#include "wavenet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavenet/error.hpp"
#include "wavenet/transform.hpp"

namespace wavenet {

void FeatureMap::flatten_into(std::span<double> out) const {
  std::size_t pos = 0;
  for (const Plane& p : channels) {
    auto v = p.values();
    std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += v.size();
  }
}

FeatureMap feature_map_from_hwc(std::span<const double> pixels, std::size_t height,
                                std::size_t width, std::size_t channels) {
  if (pixels.size() != height * width * channels) {
    throw Error(ErrorKind::Dimension, "image has " + std::to_string(pixels.size()) +
                                          " values, expected " +
                                          std::to_string(height * width * channels));
  }
  FeatureMap fm;
  fm.channels.assign(channels, Plane(height, width));
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        fm.channels[ch](r, c) = pixels[(r * width + c) * channels + ch];
      }
    }
  }
  return fm;
}

FeatureMap feature_map_from_flat(std::span<const double> flat, const FeatureMap& like) {
  FeatureMap fm;
  fm.channels.reserve(like.depth());
  std::size_t pos = 0;
  for (const Plane& p : like.channels) {
    Plane q(p.height(), p.width());
    auto dst = q.values();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), dst.size(), dst.begin());
    pos += dst.size();
    fm.channels.push_back(std::move(q));
  }
  return fm;
}

FeatureMap neuron_forward(const FeatureMap& x, WaveletParams params, NeuronCache* cache) {
  if (x.depth() == 0 || x.height() == 0 || x.width() == 0) {
    throw Error(ErrorKind::Dimension, "wavelet neuron input is empty");
  }
  const FilterPair filters = make_filters(params);

  FeatureMap out;
  out.channels.reserve(4 * x.depth());
  for (const Plane& ch : x.channels) {
    if (!ch.same_shape(x.channels.front())) {
      throw Error(ErrorKind::Dimension, "wavelet neuron input channels differ in shape");
    }
    Subbands s = dwt2_forward(ch, filters);
    for (Plane* band : {&s.approx, &s.horiz, &s.vert, &s.diag}) {
      for (double& v : band->values()) v = sigmoid(v);
      out.channels.push_back(std::move(*band));
    }
  }

  if (cache != nullptr) {
    cache->input = x;
    cache->output = out;
    cache->filled = true;
  }
  return out;
}

NeuronGradient neuron_backward(const FeatureMap& grad_out, WaveletParams params,
                               const NeuronCache& cache) {
  if (!cache.filled) throw Error(ErrorKind::State, "wavelet neuron backward called without a forward cache");
  if (grad_out.depth() != cache.output.depth() || grad_out.height() != cache.output.height() ||
      grad_out.width() != cache.output.width()) {
    throw Error(ErrorKind::Dimension, "wavelet neuron gradient does not match cached output shape");
  }

  const FilterPair filters = make_filters(params);
  const FilterGradients fgrads = filter_gradients(params);

  NeuronGradient g;
  g.grad_in.channels.reserve(cache.input.depth());
  Taps tap_sum{};
  for (std::size_t c = 0; c < cache.input.depth(); ++c) {
    Subbands pre;
    Plane* bands[4] = {&pre.approx, &pre.horiz, &pre.vert, &pre.diag};
    for (std::size_t b = 0; b < 4; ++b) {
      const Plane& s = cache.output.channels[4 * c + b];
      const Plane& go = grad_out.channels[4 * c + b];
      Plane d(s.height(), s.width());
      auto sv = s.values();
      auto gv = go.values();
      auto dv = d.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = gv[i] * sv[i] * (1.0 - sv[i]);
      *bands[b] = std::move(d);
    }
    TapGradient tg = dwt2_backward_taps(pre, cache.input.channels[c], filters);
    for (std::size_t j = 0; j < kTaps; ++j) tap_sum[j] += tg.grad_lowpass[j];
    g.grad_in.channels.push_back(std::move(tg.grad_in));
  }
  contract_taps(tap_sum, fgrads, g.grad_alpha, g.grad_beta);
  return g;
}

void dense_forward(const Matrix& in, std::span<const double> weights,
                   std::span<const double> biases, Activation act, Matrix& out) {
  const std::size_t n_in = in.cols();
  const std::size_t n_out = biases.size();
  if (weights.size() != n_in * n_out) {
    throw Error(ErrorKind::Configuration, "dense layer weights do not match " +
                                              std::to_string(n_out) + "x" + std::to_string(n_in));
  }
  out = Matrix(in.rows(), n_out);
  const auto rows = static_cast<std::ptrdiff_t>(in.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < rows; ++b) {
    auto x = in.row(static_cast<std::size_t>(b));
    auto y = out.row(static_cast<std::size_t>(b));
    for (std::size_t o = 0; o < n_out; ++o) {
      double z = biases[o] + dot(weights.subspan(o * n_in, n_in), x);
      if (act == Activation::Relu && z < 0.0) z = 0.0;
      y[o] = z;
    }
  }
}

void dense_backward(const Matrix& in, const Matrix& out, Matrix& grad_out,
                    std::span<const double> weights, Activation act,
                    std::span<double> grad_weights, std::span<double> grad_biases,
                    Matrix* grad_in) {
  const std::size_t n_in = in.cols();
  const std::size_t n_out = out.cols();
  const std::size_t batch = in.rows();

  if (act == Activation::Relu) {
    auto g = grad_out.values();
    auto y = out.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] <= 0.0) g[i] = 0.0;
    }
  }

  // Each output element is reduced over the batch in sample order.
  const auto outs = static_cast<std::ptrdiff_t>(n_out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oi = 0; oi < outs; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    auto gw = grad_weights.subspan(o * n_in, n_in);
    double gb = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double go = grad_out(b, o);
      gb += go;
      if (go == 0.0) continue;
      auto x = in.row(b);
      for (std::size_t i = 0; i < n_in; ++i) gw[i] += go * x[i];
    }
    grad_biases[o] += gb;
  }

  if (grad_in != nullptr) {
    *grad_in = Matrix(batch, n_in);
    const auto rows = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < rows; ++bi) {
      const auto b = static_cast<std::size_t>(bi);
      auto gi = grad_in->row(b);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double go = grad_out(b, o);
        if (go == 0.0) continue;
        auto w = weights.subspan(o * n_in, n_in);
        for (std::size_t i = 0; i < n_in; ++i) gi[i] += go * w[i];
      }
    }
  }
}

std::vector<double> dropout(std::span<const double> x, double keep, Mode mode, Rng& rng,
                            std::vector<double>* scale) {
  if (!(keep > 0.0 && keep <= 1.0)) {
    throw Error(ErrorKind::Configuration, "dropout keep probability must be in (0, 1], got " +
                                              std::to_string(keep));
  }
  std::vector<double> out(x.begin(), x.end());
  if (scale != nullptr) scale->assign(x.size(), 1.0);
  if (mode == Mode::Eval || keep == 1.0) return out;

  const double inv = 1.0 / keep;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = rng.bernoulli(keep) ? inv : 0.0;
    out[i] *= s;
    if (scale != nullptr) (*scale)[i] = s;
  }
  return out;
}

LossResult softmax_xent(const Matrix& logits, std::span<const int> labels) {
  const std::size_t batch = logits.rows();
  const std::size_t k = logits.cols();
  if (labels.size() != batch) {
    throw Error(ErrorKind::Data, "softmax_xent: " + std::to_string(labels.size()) +
                                     " labels for " + std::to_string(batch) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw Error(ErrorKind::Data, "label " + std::to_string(y) + " outside [0, " +
                                       std::to_string(k) + ")");
    }
  }

  LossResult r;
  r.grad_logits = Matrix(batch, k);
  if (batch == 0) return r;
  const double inv_b = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    auto z = logits.row(b);
    auto g = r.grad_logits.row(b);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = std::exp(z[i] - zmax);
      denom += g[i];
    }
    const auto y = static_cast<std::size_t>(labels[b]);
    total += std::log(denom) - (z[y] - zmax);
    for (std::size_t i = 0; i < k; ++i) g[i] = (g[i] / denom - (i == y ? 1.0 : 0.0)) * inv_b;
  }
  r.loss = total * inv_b;
  return r;
}

}  // namespace wavenet
