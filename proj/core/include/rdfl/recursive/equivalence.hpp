#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdfl/recursive/fixed_point.hpp"

namespace rdfl::recursive {

/// Σ_{i=0}^{K} Jⁱ.
Matrix neumann_truncated_inverse(const Matrix& j, std::size_t K);

struct EquivalenceEntry {
  std::size_t K = 0;
  double rel_err = 0.0;  // ‖g_unroll(K) − g_implicit‖₂ / ‖g_implicit‖₂
  double abs_err = 0.0;
};

struct EquivalenceReport {
  double rho_hat = 0.0;
  std::vector<EquivalenceEntry> entries;
  /// exp of the least-squares slope of log rel_err against K. Entries at the
  /// round-off floor are left out of the fit.
  double fitted_ratio = 0.0;
  double implicit_norm = 0.0;
};

inline FixedPointOptions audit_fixed_point_options() {
  return {.tol = 1e-10, .max_iter = 5000, .damping = 0.5, .linearize_at_solution = true};
}

/// Compares unrolled gradients from x0 at each depth with the implicit
/// gradient at the equilibrium, for the linear loss loss_gradᵀ·x.
EquivalenceReport gradient_equivalence_report(const RecursiveLayer& layer, const Vector& x0,
                                              const Vector& v, const Vector& loss_grad,
                                              const std::vector<std::size_t>& K_list,
                                              const FixedPointOptions& options =
                                                  audit_fixed_point_options());

double fit_decay_ratio(const std::vector<EquivalenceEntry>& entries);

nlohmann::json to_json(const EquivalenceReport& report);

}  // namespace rdfl::recursive
