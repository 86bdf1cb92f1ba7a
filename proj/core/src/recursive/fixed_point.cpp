#include "rdfl/recursive/fixed_point.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "instrumentation_internal.hpp"
#include "rdfl/error.hpp"
#include "rdfl/numerics/linalg.hpp"

namespace rdfl::recursive {

namespace {

std::string format_g(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", value);
  return buf;
}

}  // namespace

EquilibriumResult fixed_point_solve(const RecursiveLayer& layer, const Vector& x0,
                                    const Vector& v, const FixedPointOptions& options) {
  require(options.tol > 0.0, ErrorCode::kInvalidArgument, "fixed_point_solve: tol must be > 0");
  require(options.damping > 0.0 && options.damping <= 1.0, ErrorCode::kInvalidArgument,
          "fixed_point_solve: damping must lie in (0, 1]");
  require(x0.size() == layer.dim(), ErrorCode::kShapeMismatch,
          "fixed_point_solve: len(x0) != n");
  detail::count_fixed_point_solve();

  const double beta = options.damping;
  EquilibriumResult out;
  Vector x = x0;
  StepOutput step = layer.apply(x, v);
  for (std::size_t k = 0;; ++k) {
    const double r = norm_inf(x - step.x);
    out.residual_history.push_back(r);
    out.iterations = k;
    if (r <= options.tol) {
      out.converged = true;
      break;
    }
    if (k == options.max_iter || !std::isfinite(r)) break;
    Vector next = (1.0 - beta) * x;
    next += beta * step.x;
    if (!all_finite(next)) break;
    x = std::move(next);
    step = layer.apply(x, v);
  }
  out.residual = out.residual_history.back();
  out.x_star = std::move(x);
  out.x_next = std::move(step.x);
  out.c_star = std::move(step.c);

  if (options.linearize_at_solution && all_finite(out.x_star)) {
    Linearization lin = layer.linearize(out.x_star, v);
    out.rho_hat = numerics::spectral_radius_estimate(lin.jacobian).rho;
    out.linearization = std::move(lin);
  }
  return out;
}

void require_converged(const EquilibriumResult& eq) {
  if (!eq.converged) {
    fail(ErrorCode::kNotConverged, "fixed point not reached after " +
                                       std::to_string(eq.iterations) + " iterations (residual " +
                                       format_g(eq.residual) + ")");
  }
}

Vector solve_adjoint(const Matrix& jacobian, const Vector& loss_grad) {
  require(jacobian.is_square() && jacobian.rows() == loss_grad.size(), ErrorCode::kShapeMismatch,
          "solve_adjoint: shape mismatch");
  Matrix a = Matrix::identity(jacobian.rows());
  a -= jacobian;
  try {
    return numerics::LuFactorization(std::move(a)).solve_transpose(loss_grad);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularMatrix) throw;
    fail(ErrorCode::kUnstableEquilibrium, std::string("I - J is singular: ") + e.what());
  }
}

Vector implicit_gradient(const RecursiveLayer& layer, const EquilibriumResult& eq,
                         const Vector& v, const Vector& loss_grad,
                         const ImplicitOptions& options) {
  require_converged(eq);
  require(eq.linearization.has_value(), ErrorCode::kInvalidArgument,
          "implicit_gradient: equilibrium was solved without its linearization");
  require(loss_grad.size() == layer.dim(), ErrorCode::kShapeMismatch,
          "implicit_gradient: len(loss_grad) != n");
  if (eq.rho_hat >= 1.0 - kStabilityMargin) {
    if (options.fallback_to_unroll) {
      return unroll_gradient(unroll_forward(layer, eq.x_star, v, options.fallback_depth), loss_grad);
    }
    fail(ErrorCode::kUnstableEquilibrium,
         "spectral radius estimate " + std::to_string(eq.rho_hat) + " at the equilibrium is not < 1");
  }
  const Vector u = solve_adjoint(eq.linearization->jacobian, loss_grad);
  return eq.linearization->param_vjp(u);
}

}  // namespace rdfl::recursive
