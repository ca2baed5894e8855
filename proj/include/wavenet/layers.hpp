#pragma once

// Differentiable building blocks: wavelet neuron, dense layer, dropout and
// softmax cross-entropy. Each has an explicit forward and backward pass.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wavenet/filters.hpp"
#include "wavenet/rng.hpp"
#include "wavenet/tensor.hpp"

namespace wavenet {

enum class Mode { Train, Eval };
enum class Activation { None, Relu };

/// height x width x channels activations, stored as one plane per channel.
struct FeatureMap {
  std::vector<Plane> channels;

  std::size_t depth() const noexcept { return channels.size(); }
  std::size_t height() const noexcept { return channels.empty() ? 0 : channels.front().height(); }
  std::size_t width() const noexcept { return channels.empty() ? 0 : channels.front().width(); }
  std::size_t size() const noexcept { return depth() * height() * width(); }

  /// Channel-major copy: all of channel 0, then channel 1, ...
  void flatten_into(std::span<double> out) const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

FeatureMap feature_map_from_hwc(std::span<const double> pixels, std::size_t height,
                                std::size_t width, std::size_t channels);

/// Zeros shaped like `like`, filled from a channel-major span.
FeatureMap feature_map_from_flat(std::span<const double> flat, const FeatureMap& like);

struct NeuronCache {
  FeatureMap input;
  FeatureMap output;  // post-sigmoid
  bool filled = false;
};

struct NeuronGradient {
  FeatureMap grad_in;
  double grad_alpha = 0.0;
  double grad_beta = 0.0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// One DWT level on every input channel; output channel 4c+{0,1,2,3} holds
/// sigmoid(A, H, V, D) of input channel c. Input and output are stored in
/// `cache` when it is non-null.
FeatureMap neuron_forward(const FeatureMap& x, WaveletParams params,
                          NeuronCache* cache = nullptr);

/// Throws Error(State) if `cache` was not filled by neuron_forward.
NeuronGradient neuron_backward(const FeatureMap& grad_out, WaveletParams params,
                               const NeuronCache& cache);

/// out = act(in * W^T + b); W is out_features x in_features row-major.
void dense_forward(const Matrix& in, std::span<const double> weights,
                   std::span<const double> biases, Activation act, Matrix& out);

/// `grad_out` is the gradient w.r.t. the activated output and is overwritten
/// with the pre-activation gradient. Accumulates into grad_weights/grad_biases.
/// grad_in may be null when the input gradient is not needed.
void dense_backward(const Matrix& in, const Matrix& out, Matrix& grad_out,
                    std::span<const double> weights, Activation act,
                    std::span<double> grad_weights, std::span<double> grad_biases,
                    Matrix* grad_in);

/// Inverted dropout. In train mode each unit survives with probability `keep`
/// and survivors are scaled by 1/keep; eval mode is the identity. The applied
/// per-unit scale (0 or 1/keep) is written to `scale` when non-null.
std::vector<double> dropout(std::span<const double> x, double keep, Mode mode, Rng& rng,
                            std::vector<double>* scale = nullptr);

struct LossResult {
  double loss = 0.0;
  Matrix grad_logits;
};

/// Mean softmax cross-entropy; grad = (softmax - onehot) / B.
LossResult softmax_xent(const Matrix& logits, std::span<const int> labels);

}  // namespace wavenet
