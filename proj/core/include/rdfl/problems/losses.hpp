#pragma once

#include <string_view>
#include <vector>

#include "rdfl/numerics/matrix.hpp"
#include "rdfl/optlayer/program.hpp"

namespace rdfl::problems {

enum class LossMode { kRegret, kDecisionMse };

std::string_view to_string(LossMode mode) noexcept;
LossMode loss_mode_from_string(std::string_view name);

struct LossValue {
  double value = 0.0;
  Vector grad_x;
};

/// g(x*(ĉ), c) − g(x*(c), c) with both decisions solved here; gradient is
/// ∇ₓg(x, c) = c + 2ε·x at x = x*(ĉ).
LossValue regret_loss(const optlayer::ConvexProgram& program, const Vector& c_hat,
                      const Vector& c_true);

/// Regret of a given decision against a known optimum.
LossValue regret_at(const optlayer::ConvexProgram& program, const Vector& x, const Vector& c_true,
                    const Vector& x_oracle);

/// ‖x − x_oracle‖².
LossValue decision_mse(const Vector& x, const Vector& x_oracle);

LossValue decision_loss(LossMode mode, const optlayer::ConvexProgram& program, const Vector& x,
                        const Vector& c_true, const Vector& x_oracle);

/// sqrt of the mean squared error over samples and coordinates.
double decision_rmse(const std::vector<Vector>& x_pred, const std::vector<Vector>& x_oracle);

}  // namespace rdfl::problems
