#pragma once

#include <cstdint>
#include <span>

#include "wavenet/params.hpp"

namespace wavenet {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ParamSet m;
  ParamSet v;
  std::int64_t t = 0;
};

AdamState make_adam_state(const ParamSet& params);

/// Bias-corrected Adam update of one array at step t (t >= 1).
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::int64_t t, double lr, const AdamHyper& hyper);

/// Advances state.t and updates every array of `params` in place. Wavelet
/// angles and dense weights go through the same adam_update.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double lr,
               const AdamHyper& hyper = {});

struct LrSchedule {
  double initial = 0.01;
  double decay_rate = 0.95;
  bool staircase = true;

  void validate() const;
};

/// initial * decay_rate^epoch. Non-staircase schedules take a fractional epoch.
double lr_at(const LrSchedule& schedule, double epoch);

}  // namespace wavenet
