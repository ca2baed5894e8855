#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace wavenet {

struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  friend bool operator==(const ParamArray&, const ParamArray&) = default;
};

/// Ordered collection of uniquely named parameter arrays. Gradients and
/// optimizer moments are ParamSets with the same layout as the parameters.
class ParamSet {
 public:
  /// Appends a zero-filled array; throws Error(Configuration) on a duplicate name.
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const noexcept { return arrays_.size(); }
  ParamArray& operator[](std::size_t i) { return arrays_[i]; }
  const ParamArray& operator[](std::size_t i) const { return arrays_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;

  auto begin() { return arrays_.begin(); }
  auto end() { return arrays_.end(); }
  auto begin() const { return arrays_.begin(); }
  auto end() const { return arrays_.end(); }

  ParamSet zeros_like() const;
  bool same_layout(const ParamSet& other) const;
  std::size_t scalar_count() const;

  void scale(double factor);
  void fill(double value);

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<ParamArray> arrays_;
};

}  // namespace wavenet
