#include "wavenet/network.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "wavenet/error.hpp"
#include "wavenet/transform.hpp"

namespace wavenet {

namespace {

std::size_t dense_layer_count(const NetworkConfig& config) { return config.fc_widths.size() + 1; }

std::size_t dense_in(const NetworkConfig& config, std::size_t layer) {
  return layer == 0 ? config.flattened_width() : config.fc_widths[layer - 1];
}

std::size_t dense_out(const NetworkConfig& config, std::size_t layer) {
  return layer < config.fc_widths.size() ? config.fc_widths[layer] : config.classes;
}

void configuration_error(const std::string& what) { throw Error(ErrorKind::Configuration, what); }

struct ArrayLayout {
  std::string name;
  std::vector<std::size_t> shape;
};

std::vector<ArrayLayout> parameter_layout(const NetworkConfig& config) {
  std::vector<ArrayLayout> layout;
  for (std::size_t p = 0; p < config.paths; ++p) {
    layout.push_back({"wavelet.path" + std::to_string(p), {config.levels, 2}});
  }
  for (std::size_t i = 0; i < dense_layer_count(config); ++i) {
    layout.push_back({"dense" + std::to_string(i) + ".weight",
                      {dense_out(config, i), dense_in(config, i)}});
    layout.push_back({"dense" + std::to_string(i) + ".bias", {dense_out(config, i)}});
  }
  return layout;
}

}  // namespace

void NetworkConfig::validate() const {
  if (paths < 1) configuration_error("paths must be >= 1");
  if (levels < 1) configuration_error("levels must be >= 1");
  if (classes < 2) configuration_error("classes must be >= 2");
  if (input.height < 1 || input.width < 1 || input.channels < 1) {
    configuration_error("input height, width and channels must all be >= 1");
  }
  for (std::size_t w : fc_widths) {
    if (w < 1) configuration_error("fully connected widths must be >= 1");
  }
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    configuration_error("dropout_keep must be in (0, 1], got " + std::to_string(dropout_keep));
  }
}

InputShape NetworkConfig::path_output_shape() const {
  InputShape s = input;
  for (std::size_t l = 0; l < levels; ++l) {
    s.height = half_ceil(s.height);
    s.width = half_ceil(s.width);
    s.channels *= 4;
  }
  return s;
}

std::size_t NetworkConfig::flattened_width() const { return paths * path_output_shape().size(); }

std::size_t param_count(const NetworkConfig& config) {
  std::size_t total = 2 * config.levels * config.paths;
  for (std::size_t i = 0; i < dense_layer_count(config); ++i) {
    total += dense_in(config, i) * dense_out(config, i) + dense_out(config, i);
  }
  return total;
}

std::size_t wavelet_index(std::size_t path) { return path; }

std::size_t weight_index(const NetworkConfig& config, std::size_t layer) {
  return config.paths + 2 * layer;
}

std::size_t bias_index(const NetworkConfig& config, std::size_t layer) {
  return config.paths + 2 * layer + 1;
}

WaveletParams wavelet_params(const ParamSet& params, std::size_t path, std::size_t level) {
  const auto& v = params[wavelet_index(path)].values;
  return {v[2 * level], v[2 * level + 1]};
}

ParamSet make_parameters(const NetworkConfig& config) {
  config.validate();
  ParamSet ps;
  for (auto& a : parameter_layout(config)) ps.add(std::move(a.name), std::move(a.shape));
  return ps;
}

ParamSet initialize_parameters(const NetworkConfig& config, Rng& rng) {
  ParamSet ps = make_parameters(config);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t p = 0; p < config.paths; ++p) {
    for (double& v : ps[wavelet_index(p)].values) v = rng.uniform(0.0, kTwoPi);
  }
  for (std::size_t i = 0; i < dense_layer_count(config); ++i) {
    const double fan = static_cast<double>(dense_in(config, i) + dense_out(config, i));
    const double limit = std::sqrt(6.0 / fan);
    for (double& w : ps[weight_index(config, i)].values) w = rng.uniform(-limit, limit);
  }
  return ps;
}

void check_parameters(const NetworkConfig& config, const ParamSet& params) {
  config.validate();
  const auto layout = parameter_layout(config);
  bool match = layout.size() == params.size();
  for (std::size_t i = 0; match && i < layout.size(); ++i) {
    std::size_t n = 1;
    for (std::size_t d : layout[i].shape) n *= d;
    match = layout[i].name == params[i].name && layout[i].shape == params[i].shape &&
            params[i].values.size() == n;
  }
  if (!match) {
    configuration_error("parameter set does not match the network configuration (" +
                        std::to_string(config.paths) + " paths, " +
                        std::to_string(config.levels) + " levels)");
  }
}

Matrix network_forward(const Matrix& batch, const NetworkConfig& config, const ParamSet& params,
                       Mode mode, Rng& rng, ForwardTrace* trace) {
  check_parameters(config, params);
  if (batch.cols() != config.input.size()) {
    configuration_error("batch rows have " + std::to_string(batch.cols()) +
                        " values, network expects " + std::to_string(config.input.size()));
  }

  const std::size_t n = batch.rows();
  const std::size_t path_width = config.path_output_shape().size();
  Matrix features(n, config.flattened_width());

  if (trace != nullptr) {
    *trace = ForwardTrace{};
    trace->batch = n;
    trace->neurons.assign(
        n, std::vector<std::vector<NeuronCache>>(config.paths,
                                                 std::vector<NeuronCache>(config.levels)));
  }

  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t bi = 0; bi < rows; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const FeatureMap image = feature_map_from_hwc(batch.row(b), config.input.height,
                                                  config.input.width, config.input.channels);
    auto out_row = features.row(b);
    for (std::size_t p = 0; p < config.paths; ++p) {
      FeatureMap x;
      for (std::size_t l = 0; l < config.levels; ++l) {
        NeuronCache* cache = trace != nullptr ? &trace->neurons[b][p][l] : nullptr;
        x = neuron_forward(l == 0 ? image : x, wavelet_params(params, p, l), cache);
      }
      x.flatten_into(out_row.subspan(p * path_width, path_width));
    }
  }

  const std::size_t layers = dense_layer_count(config);
  const std::size_t hidden = config.fc_widths.size();
  if (trace != nullptr) {
    trace->dense_inputs.resize(layers);
    trace->dense_outputs.resize(layers);
    trace->dropout_scale.resize(hidden);
  }

  Matrix h = std::move(features);
  for (std::size_t i = 0; i < layers; ++i) {
    Matrix out;
    const Activation act = i < hidden ? Activation::Relu : Activation::None;
    dense_forward(h, params[weight_index(config, i)].values, params[bias_index(config, i)].values,
                  act, out);
    if (trace != nullptr) trace->dense_inputs[i] = std::move(h);
    if (i == layers - 1) {
      if (trace != nullptr) {
        trace->dense_outputs[i] = out;
        trace->valid = true;
      }
      return out;
    }
    std::vector<double> scale;
    std::vector<double> dropped = dropout(out.values(), config.dropout_keep, mode, rng, &scale);
    h = Matrix(out.rows(), out.cols());
    std::copy(dropped.begin(), dropped.end(), h.values().begin());
    if (trace != nullptr) {
      trace->dense_outputs[i] = std::move(out);
      trace->dropout_scale[i] = std::move(scale);
    }
  }
  return h;  // unreachable: there is always a classifier layer
}

ParamSet network_backward(const Matrix& grad_logits, const ForwardTrace& trace,
                          const NetworkConfig& config, const ParamSet& params) {
  check_parameters(config, params);
  const std::size_t layers = dense_layer_count(config);
  const std::size_t hidden = config.fc_widths.size();
  if (!trace.valid || trace.batch != grad_logits.rows() || trace.neurons.size() != trace.batch ||
      trace.dense_inputs.size() != layers || trace.dropout_scale.size() != hidden) {
    throw Error(ErrorKind::State, "network_backward needs the trace of a matching forward pass");
  }
  if (grad_logits.cols() != config.classes) {
    configuration_error("logit gradient has " + std::to_string(grad_logits.cols()) +
                        " columns, network has " + std::to_string(config.classes) + " classes");
  }

  ParamSet grads = params.zeros_like();
  Matrix g = grad_logits;
  for (std::size_t li = layers; li-- > 0;) {
    if (li < hidden) {
      auto gv = g.values();
      const auto& s = trace.dropout_scale[li];
      for (std::size_t k = 0; k < gv.size(); ++k) gv[k] *= s[k];
    }
    const Activation act = li < hidden ? Activation::Relu : Activation::None;
    Matrix gin;
    dense_backward(trace.dense_inputs[li], trace.dense_outputs[li], g,
                   params[weight_index(config, li)].values, act,
                   grads[weight_index(config, li)].values, grads[bias_index(config, li)].values,
                   &gin);
    g = std::move(gin);
  }

  const std::size_t n = trace.batch;
  const std::size_t per_path = 2 * config.levels;
  const std::size_t path_width = config.path_output_shape().size();
  std::vector<double> sample_grads(n * config.paths * per_path, 0.0);

  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t bi = 0; bi < rows; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    auto grow = g.row(b);
    for (std::size_t p = 0; p < config.paths; ++p) {
      const auto& caches = trace.neurons[b][p];
      FeatureMap go = feature_map_from_flat(grow.subspan(p * path_width, path_width),
                                            caches.back().output);
      double* dst = &sample_grads[(b * config.paths + p) * per_path];
      for (std::size_t l = config.levels; l-- > 0;) {
        NeuronGradient ng = neuron_backward(go, wavelet_params(params, p, l), caches[l]);
        dst[2 * l] = ng.grad_alpha;
        dst[2 * l + 1] = ng.grad_beta;
        go = std::move(ng.grad_in);
      }
    }
  }

  // Sample-ordered reduction keeps results independent of the thread schedule.
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t p = 0; p < config.paths; ++p) {
      auto& dst = grads[wavelet_index(p)].values;
      const double* src = &sample_grads[(b * config.paths + p) * per_path];
      for (std::size_t k = 0; k < per_path; ++k) dst[k] += src[k];
    }
  }
  return grads;
}

std::vector<FeatureMap> path_decomposition(std::span<const double> image,
                                           const NetworkConfig& config, const ParamSet& params,
                                           std::size_t path) {
  check_parameters(config, params);
  if (path >= config.paths) {
    configuration_error("path " + std::to_string(path) + " out of range");
  }
  std::vector<FeatureMap> levels;
  FeatureMap x = feature_map_from_hwc(image, config.input.height, config.input.width,
                                      config.input.channels);
  for (std::size_t l = 0; l < config.levels; ++l) {
    x = neuron_forward(x, wavelet_params(params, path, l));
    levels.push_back(x);
  }
  return levels;
}

}  // namespace wavenet
