#pragma once

#include <cstdint>

#include "rdfl/predictor/mlp.hpp"

namespace rdfl::predictor {

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  Vector first_moment;
  Vector second_moment;
};

/// One Adam update with decoupled weight decay (θ ← θ − lr·wd·θ before the
/// moment step). State is lazily sized on the first call.
void sgd_adam_step(MlpParams& params, const PredictorGradients& grads, AdamState& state,
                   const AdamConfig& config);

/// Same update on a flat parameter vector.
void adam_step(Vector& theta, const Vector& grad, AdamState& state, const AdamConfig& config);

}  // namespace rdfl::predictor
