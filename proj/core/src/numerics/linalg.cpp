#include "rdfl/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/numerics/random.hpp"

namespace rdfl::numerics {

LuFactorization::LuFactorization(Matrix a) : lu_(std::move(a)) {
  if (!lu_.is_square()) fail(ErrorCode::kShapeMismatch, "LU of a non-square matrix");
  const std::size_t n = lu_.rows();
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});

  std::vector<double> column_scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      column_scale[j] = std::max(column_scale[j], std::abs(lu_(i, j)));

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot_row = k;
    double pivot_mag = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double mag = std::abs(lu_(i, k));
      if (mag > pivot_mag) {
        pivot_mag = mag;
        pivot_row = i;
      }
    }
    if (column_scale[k] == 0.0 || pivot_mag < kSingularPivotTolerance * column_scale[k]) {
      fail(ErrorCode::kSingularMatrix,
           "singular matrix: pivot " + std::to_string(pivot_mag) + " in column " +
               std::to_string(k));
    }
    if (pivot_row != k) {
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(pivot_row).begin());
      std::swap(perm_[k], perm_[pivot_row]);
    }
    const double pivot = lu_(k, k);
    auto row_k = lu_.row(k);
    for (std::size_t i = k + 1; i < n; ++i) {
      auto row_i = lu_.row(i);
      const double factor = row_i[k] / pivot;
      row_i[k] = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) row_i[j] -= factor * row_k[j];
    }
  }
}

Matrix LuFactorization::solve(const Matrix& b) const {
  const std::size_t n = size();
  if (b.rows() != n) fail(ErrorCode::kShapeMismatch, "LU solve: rhs row count mismatch");
  const std::size_t k = b.cols();
  Matrix x(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = b.row(perm_[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  // Forward substitution with unit-lower L, row-oriented so that the inner loop
  // runs over contiguous right-hand-side columns.
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double l = lu_(i, j);
      if (l == 0.0) continue;
      auto xj = x.row(j);
      for (std::size_t c = 0; c < k; ++c) xi[c] -= l * xj[c];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t j = ii + 1; j < n; ++j) {
      const double u = lu_(ii, j);
      if (u == 0.0) continue;
      auto xj = x.row(j);
      for (std::size_t c = 0; c < k; ++c) xi[c] -= u * xj[c];
    }
    const double d = lu_(ii, ii);
    for (std::size_t c = 0; c < k; ++c) xi[c] /= d;
  }
  return x;
}

Vector LuFactorization::solve(const Vector& b) const {
  const std::size_t n = size();
  if (b.size() != n) fail(ErrorCode::kShapeMismatch, "LU solve: rhs size mismatch");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    auto li = lu_.row(i);
    for (std::size_t j = 0; j < i; ++j) s -= li[j] * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    auto ui = lu_.row(i);
    for (std::size_t j = i + 1; j < n; ++j) s -= ui[j] * x[j];
    x[i] = s / ui[i];
  }
  return x;
}

Vector LuFactorization::solve_transpose(const Vector& b) const {
  // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ w = y, x = Pᵀ w.
  const std::size_t n = size();
  if (b.size() != n) fail(ErrorCode::kShapeMismatch, "LU transpose solve: size mismatch");
  Vector y = b;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] /= lu_(i, i);
    const double yi = y[i];
    auto ui = lu_.row(i);
    for (std::size_t j = i + 1; j < n; ++j) y[j] -= ui[j] * yi;
  }
  for (std::size_t i = n; i-- > 0;) {
    const double yi = y[i];
    auto li = lu_.row(i);
    for (std::size_t j = 0; j < i; ++j) y[j] -= li[j] * yi;
  }
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = y[i];
  return x;
}

Matrix lu_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail(ErrorCode::kShapeMismatch, "lu_solve: rows(A) != rows(B)");
  return LuFactorization(a).solve(b);
}

Vector lu_solve(const Matrix& a, const Vector& b) { return LuFactorization(a).solve(b); }

Cholesky::Cholesky(Matrix a) : l_(std::move(a)) {
  if (!l_.is_square()) fail(ErrorCode::kShapeMismatch, "Cholesky of a non-square matrix");
  const std::size_t n = l_.rows();
  for (std::size_t j = 0; j < n; ++j) {
    auto lj = l_.row(j);
    double d = lj[j];
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > 0.0) || !std::isfinite(d))
      fail(ErrorCode::kSingularMatrix, "Cholesky: matrix not positive definite");
    const double djj = std::sqrt(d);
    lj[j] = djj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l_.row(i);
      double s = li[j];
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / djj;
    }
  }
}

Vector Cholesky::solve(const Vector& b) const {
  const std::size_t n = l_.rows();
  if (b.size() != n) fail(ErrorCode::kShapeMismatch, "Cholesky solve: size mismatch");
  Vector y = b;
  for (std::size_t i = 0; i < n; ++i) {
    auto li = l_.row(i);
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * y[k];
    y[i] = s / li[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * y[k];
    y[i] = s / l_(i, i);
  }
  return y;
}

SpectralEstimate spectral_radius_estimate(const Matrix& j, std::size_t max_iters,
                                          double tol) {
  if (!j.is_square()) fail(ErrorCode::kShapeMismatch, "spectral radius of a non-square matrix");
  SpectralEstimate out;
  const std::size_t n = j.rows();
  if (n == 0) {
    out.converged = true;
    return out;
  }
  Rng rng(kPowerIterationSeed);
  Vector y = rng.normal_vector(n);
  y *= 1.0 / norm2(y);

  // log_growth[k] = log ‖Jᵏ y₀‖
  std::vector<double> log_growth{0.0};
  log_growth.reserve(max_iters + 1);
  double previous = -1.0;
  for (std::size_t k = 1; k <= max_iters; ++k) {
    Vector w = j * y;
    const double nrm = norm2(w);
    if (nrm == 0.0 || !std::isfinite(nrm)) {
      out.rho = nrm == 0.0 ? 0.0 : out.rho;
      out.iterations = k;
      out.converged = nrm == 0.0;
      return out;
    }
    log_growth.push_back(log_growth.back() + std::log(nrm));
    y = (1.0 / nrm) * std::move(w);

    const std::size_t window = (k + 1) / 2;
    const double estimate =
        std::exp((log_growth[k] - log_growth[k - window]) / static_cast<double>(window));
    out.rho = estimate;
    out.iterations = k;
    if (k >= 8 && std::abs(estimate - previous) <= tol * estimate) {
      out.converged = true;
      return out;
    }
    previous = estimate;
  }
  return out;
}

Matrix finite_difference_jacobian(const VectorFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) fail(ErrorCode::kInvalidArgument, "finite difference step must be positive");
  Matrix jac;
  Vector probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const Vector plus = f(probe);
    probe[j] = x[j] - h;
    const Vector minus = f(probe);
    probe[j] = x[j];
    if (j == 0) jac = Matrix(plus.size(), x.size());
    if (plus.size() != jac.rows() || minus.size() != jac.rows())
      fail(ErrorCode::kShapeMismatch, "finite difference: output size changed");
    for (std::size_t i = 0; i < plus.size(); ++i) jac(i, j) = (plus[i] - minus[i]) / (2.0 * h);
  }
  return jac;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h) {
  if (!(h > 0.0)) fail(ErrorCode::kInvalidArgument, "finite difference step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double plus = f(probe);
    probe[j] = x[j] - h;
    const double minus = f(probe);
    probe[j] = x[j];
    g[j] = (plus - minus) / (2.0 * h);
  }
  return g;
}

}  // namespace rdfl::numerics
