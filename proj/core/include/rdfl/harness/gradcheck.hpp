#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rdfl/optlayer/program.hpp"
#include "rdfl/predictor/mlp.hpp"
#include "rdfl/recursive/layer.hpp"

namespace rdfl::harness {

/// Builds a layer for a flattened parameter vector.
using LayerFactory = std::function<std::unique_ptr<recursive::RecursiveLayer>(const Vector& theta)>;

enum class GradScheme { kUnroll, kImplicit };

struct GradcheckOptions {
  GradScheme scheme = GradScheme::kUnroll;
  std::size_t K = 5;
  double fd_step = 1e-5;
  double implicit_tol = 1e-10;  // equilibrium used by the analytic gradient
  double fd_tol = 1e-13;        // inside the finite-difference loop, times 1 + ‖x*‖∞
  /// Entries below this fraction of ‖fd‖∞ are compared against that floor
  /// instead of their own magnitude.
  double relative_floor = 1e-5;
};

struct GradcheckResult {
  Vector analytic;
  Vector numeric;
  double max_rel_err = 0.0;
  double rho_hat = 0.0;
};

/// max_i |a_i − b_i| / max(|b_i|, floor·‖b‖∞).
double max_relative_error(const Vector& a, const Vector& b, double relative_floor);

/// Analytic gradient of loss_gradᵀ·x (x = x_K or x*) against central
/// differences over every parameter.
GradcheckResult check_gradient(const LayerFactory& factory, const Vector& theta, const Vector& x0,
                               const Vector& v, const Vector& loss_grad,
                               const GradcheckOptions& options);

/// Small coupled newsvendor instance with a contracting loop, for gradient
/// audits. The decision input is scaled down and the x-columns of the first
/// layer rescaled until the loop Jacobian's spectral radius at the equilibrium
/// is within rho_tolerance of rho_target (best effort; rho_hat records it).
struct CheckInstance {
  optlayer::ConvexProgram program;
  predictor::MlpParams params;
  Vector v;
  Vector x0;
  Vector loss_grad;
  double rho_hat = 0.0;
};

struct CheckInstanceOptions {
  std::size_t n = 4;
  std::size_t d = 3;
  std::size_t hidden = 8;
  double reg_eps = 1e-2;
  double rho_target = 0.4;
  double rho_tolerance = 0.02;
};

CheckInstance make_newsvendor_check_instance(std::uint64_t seed,
                                             const CheckInstanceOptions& options = {});

/// True when every point is away from predictor kinks and from active-set
/// switches of the solve (each row has slack ≥ slack_gap or dual ≥ dual_gap).
bool smooth_at_points(const CheckInstance& inst, const std::vector<Vector>& xs,
                      double min_preactivation = 1e-3, double slack_gap = 1e-2,
                      double dual_gap = 1e-4);

}  // namespace rdfl::harness
