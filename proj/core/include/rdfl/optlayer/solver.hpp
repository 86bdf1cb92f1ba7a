#pragma once

#include <cstddef>

#include "rdfl/error.hpp"
#include "rdfl/optlayer/program.hpp"

namespace rdfl::optlayer {

/// Optimal primal point with one multiplier per inequality row.
struct PrimalDualSolution {
  Vector x;
  Vector duals;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  /// True when the final point came from the active-set refinement step
  /// (exact complementarity), false for a raw interior-point iterate.
  bool polished = false;
};

struct KktResiduals {
  double primal = 0.0;         // max(0, max(G·x − h))
  double dual_sign = 0.0;      // max(0, −min dual)
  double complementarity = 0.0;  // max |dualᵢ·(G·x − h)ᵢ|
  double stationarity = 0.0;   // ‖c + 2ε·x + Gᵀ·dual‖∞

  double max() const noexcept;
};

KktResiduals kkt_residuals(const ConvexProgram& program, const Vector& c,
                           const PrimalDualSolution& sol);

struct SolverOptions {
  std::size_t max_iterations = 100;
  double duality_tolerance = 1e-9;
  double residual_tolerance = 1e-9;
  /// Try an equality-constrained solve on the predicted active set once the
  /// path is close to optimal; accepted only if it verifies as a KKT point.
  bool polish = true;
};

/// Thrown with the best iterate attached when the solver stops early.
class SolverError : public Error {
 public:
  SolverError(ErrorCode code, const std::string& message, PrimalDualSolution best)
      : Error(code, message), best_(std::move(best)) {}
  const PrimalDualSolution& best_iterate() const noexcept { return best_; }

 private:
  PrimalDualSolution best_;
};

/// Primal-dual interior-point (Mehrotra predictor-corrector) solve of
/// min cᵀx + ε‖x‖² s.t. G·x ≤ h.
PrimalDualSolution solve(const ConvexProgram& program, const Vector& c,
                         const SolverOptions& options = {});

}  // namespace rdfl::optlayer
