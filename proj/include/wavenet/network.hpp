#pragma once

// Multi-path wavelet network.
//
//   input -> [path 0: neuron -> neuron -> neuron] -+
//         -> [path 1: ...                       ] -+-> concat -> flatten
//         -> ...                                  -+
//   -> (dense + ReLU + dropout) x len(fc_widths) -> dense -> logits
//
// Paths share the architecture and differ only in their (alpha, beta).
// Parameters live in a ParamSet with the layout
//   wavelet.path{p}   [levels, 2]   (alpha, beta) per level
//   dense{i}.weight   [out, in]
//   dense{i}.bias     [out]
// where the last dense layer is the classifier.

#include <cstddef>
#include <span>
#include <vector>

#include "wavenet/layers.hpp"
#include "wavenet/params.hpp"
#include "wavenet/rng.hpp"
#include "wavenet/tensor.hpp"

namespace wavenet {

struct InputShape {
  std::size_t height = 28;
  std::size_t width = 28;
  std::size_t channels = 1;

  std::size_t size() const noexcept { return height * width * channels; }
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct NetworkConfig {
  std::size_t paths = 8;
  std::size_t levels = 3;
  std::vector<std::size_t> fc_widths{32, 32};
  std::size_t classes = 10;
  InputShape input;
  double dropout_keep = 0.8;

  /// Throws Error(Configuration) naming the first offending field.
  void validate() const;

  /// Shape of one path's output after `levels` neurons.
  InputShape path_output_shape() const;
  std::size_t flattened_width() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// 2 * levels * paths wavelet angles plus every dense weight and bias.
std::size_t param_count(const NetworkConfig& config);

/// Named, zero-filled parameter layout for `config`.
ParamSet make_parameters(const NetworkConfig& config);

/// Glorot-uniform dense weights, zero biases, angles uniform in [0, 2 pi).
ParamSet initialize_parameters(const NetworkConfig& config, Rng& rng);

/// Throws Error(Configuration) unless `params` has the layout of make_parameters(config).
void check_parameters(const NetworkConfig& config, const ParamSet& params);

std::size_t wavelet_index(std::size_t path);
std::size_t weight_index(const NetworkConfig& config, std::size_t layer);
std::size_t bias_index(const NetworkConfig& config, std::size_t layer);
WaveletParams wavelet_params(const ParamSet& params, std::size_t path, std::size_t level);

/// Everything network_backward needs from one train-mode forward pass.
struct ForwardTrace {
  bool valid = false;
  std::size_t batch = 0;
  // [sample][path][level]
  std::vector<std::vector<std::vector<NeuronCache>>> neurons;
  // dense_inputs[i] feeds dense layer i; dense_outputs[i] is its activated output
  // (before dropout); dropout_scale[i] applies to hidden layer i.
  std::vector<Matrix> dense_inputs;
  std::vector<Matrix> dense_outputs;
  std::vector<std::vector<double>> dropout_scale;
};

/// Runs a batch (rows = samples, each row an interleaved h x w x c image).
/// Dropout draws from `rng` in train mode only. When `trace` is non-null it
/// is filled for a subsequent network_backward.
Matrix network_forward(const Matrix& batch, const NetworkConfig& config, const ParamSet& params,
                       Mode mode, Rng& rng, ForwardTrace* trace = nullptr);

/// Gradients for every parameter given dL/dlogits. Throws Error(State) if the
/// trace is empty or belongs to a batch of different size.
ParamSet network_backward(const Matrix& grad_logits, const ForwardTrace& trace,
                          const NetworkConfig& config, const ParamSet& params);

/// Per-level neuron outputs of one path for a single image: result[l] is the
/// output of neuron l.
std::vector<FeatureMap> path_decomposition(std::span<const double> image,
                                           const NetworkConfig& config, const ParamSet& params,
                                           std::size_t path);

}  // namespace wavenet
