#include "rdfl/problems/losses.hpp"

#include <cmath>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/optlayer/solver.hpp"

namespace rdfl::problems {

std::string_view to_string(LossMode mode) noexcept {
  return mode == LossMode::kRegret ? "regret" : "decision_mse";
}

LossMode loss_mode_from_string(std::string_view name) {
  if (name == "regret") return LossMode::kRegret;
  if (name == "decision_mse") return LossMode::kDecisionMse;
  fail(ErrorCode::kConfigError, "unknown loss mode '" + std::string(name) + "'");
}

LossValue regret_at(const optlayer::ConvexProgram& program, const Vector& x, const Vector& c_true,
                    const Vector& x_oracle) {
  require(x.size() == program.n() && c_true.size() == program.n() &&
              x_oracle.size() == program.n(),
          ErrorCode::kDimensionMismatch, "regret: vector lengths differ from n");
  LossValue out;
  out.value = program.objective(c_true, x) - program.objective(c_true, x_oracle);
  out.grad_x = c_true + (2.0 * program.reg_eps()) * x;
  return out;
}

LossValue regret_loss(const optlayer::ConvexProgram& program, const Vector& c_hat,
                      const Vector& c_true) {
  const Vector x_hat = optlayer::solve(program, c_hat).x;
  const Vector x_true = optlayer::solve(program, c_true).x;
  return regret_at(program, x_hat, c_true, x_true);
}

LossValue decision_mse(const Vector& x, const Vector& x_oracle) {
  require(x.size() == x_oracle.size(), ErrorCode::kDimensionMismatch,
          "decision mse: vector lengths differ");
  LossValue out;
  const Vector diff = x - x_oracle;
  out.value = dot(diff, diff);
  out.grad_x = 2.0 * diff;
  return out;
}

LossValue decision_loss(LossMode mode, const optlayer::ConvexProgram& program, const Vector& x,
                        const Vector& c_true, const Vector& x_oracle) {
  if (mode == LossMode::kRegret) return regret_at(program, x, c_true, x_oracle);
  return decision_mse(x, x_oracle);
}

double decision_rmse(const std::vector<Vector>& x_pred, const std::vector<Vector>& x_oracle) {
  require(x_pred.size() == x_oracle.size() && !x_pred.empty(), ErrorCode::kDimensionMismatch,
          "decision rmse: need equally many, non-zero, predictions and oracles");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < x_pred.size(); ++s) {
    require(x_pred[s].size() == x_oracle[s].size(), ErrorCode::kDimensionMismatch,
            "decision rmse: vector lengths differ");
    for (std::size_t i = 0; i < x_pred[s].size(); ++i) {
      const double e = x_pred[s][i] - x_oracle[s][i];
      sum += e * e;
    }
    count += x_pred[s].size();
  }
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace rdfl::problems
