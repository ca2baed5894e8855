#include "wavenet/params.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "wavenet/error.hpp"

namespace wavenet {

std::size_t ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  if (find(name)) throw Error(ErrorKind::Configuration, "duplicate parameter name '" + name + "'");
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  arrays_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return arrays_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name == name) return i;
  }
  return std::nullopt;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.fill(0.0);
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name != other.arrays_[i].name || arrays_[i].shape != other.arrays_[i].shape ||
        arrays_[i].values.size() != other.arrays_[i].values.size()) {
      return false;
    }
  }
  return true;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += a.values.size();
  return n;
}

void ParamSet::scale(double factor) {
  for (auto& a : arrays_) {
    for (double& v : a.values) v *= factor;
  }
}

void ParamSet::fill(double value) {
  for (auto& a : arrays_) std::fill(a.values.begin(), a.values.end(), value);
}

}  // namespace wavenet
