#include "wavenet/optim.hpp"

#include <cmath>
#include <string>

#include "wavenet/error.hpp"

namespace wavenet {

AdamState make_adam_state(const ParamSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::int64_t t, double lr, const AdamHyper& hyper) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw Error(ErrorKind::Configuration, "adam_update: parameter, gradient and moment sizes differ");
  }
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double lr,
               const AdamHyper& hyper) {
  if (!(lr > 0.0)) throw Error(ErrorKind::Configuration, "learning rate must be positive");
  if (!params.same_layout(grads) || !params.same_layout(state.m) ||
      !params.same_layout(state.v)) {
    throw Error(ErrorKind::Configuration, "adam_step: gradient or optimizer state layout mismatch");
  }
  ++state.t;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i].values, grads[i].values, state.m[i].values, state.v[i].values, state.t,
                lr, hyper);
  }
}

void LrSchedule::validate() const {
  if (!(initial > 0.0)) throw Error(ErrorKind::Configuration, "lr_initial must be positive");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) {
    throw Error(ErrorKind::Configuration,
                "lr_decay must be in (0, 1], got " + std::to_string(decay_rate));
  }
}

double lr_at(const LrSchedule& schedule, double epoch) {
  const double e = schedule.staircase ? std::floor(epoch) : epoch;
  return schedule.initial * std::pow(schedule.decay_rate, e);
}

}  // namespace wavenet
