#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "rdfl/numerics/matrix.hpp"

namespace rdfl::numerics {

/// Relative pivot threshold used by LuFactorization: a pivot is rejected when
/// its magnitude is below this times the largest magnitude in its column.
inline constexpr double kSingularPivotTolerance = 1e-12;

/// LU factorization with partial (row) pivoting, P·A = L·U.
/// Throws Error{kSingularMatrix} at construction when a pivot is too small.
class LuFactorization {
 public:
  explicit LuFactorization(Matrix a);

  std::size_t size() const noexcept { return lu_.rows(); }

  /// Solves A·X = B.
  Matrix solve(const Matrix& b) const;
  Vector solve(const Vector& b) const;
  /// Solves Aᵀ·x = b with the same factors.
  Vector solve_transpose(const Vector& b) const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
};

/// Solves A·X = B by LU with partial pivoting.
Matrix lu_solve(const Matrix& a, const Matrix& b);
Vector lu_solve(const Matrix& a, const Vector& b);

/// Cholesky factorization of a symmetric positive definite matrix. Used for the
/// interior-point normal equations, which are SPD but badly scaled near the
/// end of the path; there only positivity of the pivots is required.
class Cholesky {
 public:
  explicit Cholesky(Matrix a);
  Vector solve(const Vector& b) const;

 private:
  Matrix l_;
};

struct SpectralEstimate {
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr std::size_t kDefaultPowerIterations = 1000;
inline constexpr double kDefaultPowerTolerance = 1e-8;
inline constexpr std::uint64_t kPowerIterationSeed = 0x5eed'2024ULL;

/// Power-iteration estimate of the spectral radius. The estimate is the
/// geometric growth rate of ‖Jᵏy‖ over the second half of the run, which also
/// settles for complex-conjugate dominant pairs where the plain Rayleigh ratio
/// oscillates. Only an estimate: callers use it as a stability guard.
SpectralEstimate spectral_radius_estimate(
    const Matrix& j, std::size_t max_iters = kDefaultPowerIterations,
    double tol = kDefaultPowerTolerance);

using VectorFunction = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian, entry (i, j) = (f(x + h eⱼ)ᵢ − f(x − h eⱼ)ᵢ) / 2h.
Matrix finite_difference_jacobian(const VectorFunction& f, const Vector& x,
                                  double h);

/// Central-difference gradient of a scalar function.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h);

}  // namespace rdfl::numerics
