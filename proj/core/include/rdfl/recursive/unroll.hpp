#pragma once

#include <cstddef>
#include <vector>

#include "rdfl/recursive/layer.hpp"

namespace rdfl::recursive {

/// Recorded forward pass of K explicit iterations.
struct UnrollTrace {
  std::vector<Vector> x_seq;         // x₀ … x_K
  std::vector<Vector> c_seq;         // ĉ₁ … ĉ_K
  std::vector<Linearization> steps;  // step i linearized at x_{i−1}
  std::vector<double> residuals;     // ‖x_i − x_{i−1}‖∞

  std::size_t depth() const noexcept { return steps.size(); }
};

inline constexpr std::size_t kDefaultUnrollDepth = 10;

/// Runs x_i = Φ(x_{i−1}, v) for i = 1..K, keeping each step's linearization.
/// Errors from a step are rethrown with the step index in the message.
UnrollTrace unroll_forward(const RecursiveLayer& layer, const Vector& x0, const Vector& v,
                           std::size_t K);

/// Gradient of loss_gradᵀ·x_K with respect to the layer parameters by reverse
/// accumulation: a = loss_grad; for i = K..1 add VJP_i(a), then a ← J_iᵀ·a.
Vector unroll_gradient(const UnrollTrace& trace, const Vector& loss_grad);

}  // namespace rdfl::recursive
