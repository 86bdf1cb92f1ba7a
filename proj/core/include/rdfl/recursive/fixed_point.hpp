#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rdfl/recursive/layer.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace rdfl::recursive {

struct FixedPointOptions {
  double tol = 0.2;
  std::size_t max_iter = 100;
  double damping = 0.5;
  /// Linearize Φ at the final iterate and estimate its spectral radius.
  bool linearize_at_solution = true;
};

struct EquilibriumResult {
  Vector x_star;
  Vector x_next;  // Φ(x_star)
  Vector c_star;
  double residual = 0.0;  // ‖x_star − Φ(x_star)‖∞
  std::size_t iterations = 0;
  bool converged = false;
  double rho_hat = 0.0;
  std::vector<double> residual_history;
  std::optional<Linearization> linearization;  // at x_star
};

/// Damped Picard iteration x ← (1 − β)·x + β·Φ(x) until ‖x − Φ(x)‖∞ ≤ tol.
/// Never throws for non-convergence: the result carries converged = false.
EquilibriumResult fixed_point_solve(const RecursiveLayer& layer, const Vector& x0,
                                    const Vector& v, const FixedPointOptions& options = {});

/// Throws Error{kNotConverged} unless eq.converged.
void require_converged(const EquilibriumResult& eq);

/// Threshold of the stability guard on rho_hat.
inline constexpr double kStabilityMargin = 1e-6;

struct ImplicitOptions {
  /// When the guard trips, unroll from x_star instead of failing. Off by default.
  bool fallback_to_unroll = false;
  std::size_t fallback_depth = kDefaultUnrollDepth;
};

/// Solves (I − J)ᵀ·u = g directly (dense LU). Throws
/// Error{kUnstableEquilibrium} when I − J is singular.
Vector solve_adjoint(const Matrix& jacobian, const Vector& loss_grad);

/// Gradient of loss_gradᵀ·x* through the equilibrium: one adjoint solve at x*
/// then the single parameter VJP. Requires a converged result with its
/// linearization; throws Error{kUnstableEquilibrium} when rho_hat ≥ 1 − 1e-6.
Vector implicit_gradient(const RecursiveLayer& layer, const EquilibriumResult& eq,
                         const Vector& v, const Vector& loss_grad,
                         const ImplicitOptions& options = {});

}  // namespace rdfl::recursive
