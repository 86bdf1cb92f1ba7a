#include "rdfl/predictor/adam.hpp"

#include <cmath>

#include "rdfl/error.hpp"

namespace rdfl::predictor {

void adam_step(Vector& theta, const Vector& grad, AdamState& state, const AdamConfig& config) {
  if (theta.size() != grad.size()) fail(ErrorCode::kShapeMismatch, "adam: gradient size mismatch");
  if (state.first_moment.size() != theta.size()) {
    state.first_moment = Vector(theta.size());
    state.second_moment = Vector(theta.size());
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    theta[i] -= config.lr * config.weight_decay * theta[i];
    theta[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void sgd_adam_step(MlpParams& params, const PredictorGradients& grads, AdamState& state,
                   const AdamConfig& config) {
  Vector theta = params.flatten();
  adam_step(theta, grads.flatten(), state, config);
  params.assign(theta);
}

}  // namespace rdfl::predictor
