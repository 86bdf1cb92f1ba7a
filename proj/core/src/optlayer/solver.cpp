#include "rdfl/optlayer/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rdfl/numerics/linalg.hpp"

namespace rdfl::optlayer {

double KktResiduals::max() const noexcept {
  return std::max({primal, dual_sign, complementarity, stationarity});
}

KktResiduals kkt_residuals(const ConvexProgram& program, const Vector& c,
                           const PrimalDualSolution& sol) {
  require(c.size() == program.n() && sol.x.size() == program.n() &&
              sol.duals.size() == program.constraint_count(),
          ErrorCode::kShapeMismatch, "kkt_residuals: dimension mismatch");
  KktResiduals out;
  const Vector gx = program.apply_g(sol.x);
  const Vector& h = program.ineq_h();
  for (std::size_t r = 0; r < gx.size(); ++r) {
    const double slack = gx[r] - h[r];
    out.primal = std::max(out.primal, slack);
    out.dual_sign = std::max(out.dual_sign, -sol.duals[r]);
    out.complementarity = std::max(out.complementarity, std::abs(sol.duals[r] * slack));
  }
  Vector stat = program.apply_gt(sol.duals);
  for (std::size_t j = 0; j < stat.size(); ++j) {
    stat[j] += c[j] + 2.0 * program.reg_eps() * sol.x[j];
  }
  out.stationarity = norm_inf(stat);
  return out;
}

namespace {

struct Iterate {
  Vector x;
  Vector s;
  Vector z;
};

PrimalDualSolution finish(const ConvexProgram& program, const Vector& c, Vector x, Vector duals,
                          std::size_t iterations, bool polished) {
  PrimalDualSolution sol;
  sol.x = std::move(x);
  sol.duals = std::move(duals);
  sol.objective_value = program.objective(c, sol.x);
  sol.iterations = iterations;
  sol.polished = polished;
  sol.kkt_residual = kkt_residuals(program, c, sol).max();
  return sol;
}

// Largest step in (0, 1] keeping v + alpha·dv ≥ 0.
double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

// Equality-constrained solve on a guessed active set A: stationarity and
// G_A·x = h_A give (G_A G_Aᵀ)·z_A = −2ε·h_A − G_A·c and x = −(c + G_Aᵀ z_A)/(2ε).
// Returns nullopt when the Gram matrix is singular.
struct ActiveSolve {
  Vector x;
  Vector duals;  // full length, zero off A
};

std::optional<ActiveSolve> solve_on_active_set(const ConvexProgram& program, const Vector& c,
                                               const std::vector<std::size_t>& active) {
  const double eps = program.reg_eps();
  const auto& rows = program.sparse_rows();
  const Vector& h = program.ineq_h();
  const std::size_t m = rows.size();
  const std::size_t n = program.n();
  const std::size_t k = active.size();

  Vector z_active(k);
  if (k > 0) {
    struct Hit {
      std::size_t slot;
      double value;
    };
    std::vector<std::vector<Hit>> by_col(n);
    for (std::size_t a = 0; a < k; ++a) {
      for (const auto& e : rows[active[a]]) by_col[e.col].push_back({a, e.value});
    }
    Matrix gram(k, k);
    for (const auto& hits : by_col) {
      for (const auto& p : hits) {
        for (const auto& q : hits) gram(p.slot, q.slot) += p.value * q.value;
      }
    }
    Vector rhs(k);
    for (std::size_t a = 0; a < k; ++a) {
      double gc = 0.0;
      for (const auto& e : rows[active[a]]) gc += e.value * c[e.col];
      rhs[a] = -2.0 * eps * h[active[a]] - gc;
    }
    try {
      z_active = numerics::LuFactorization(std::move(gram)).solve(rhs);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  ActiveSolve out;
  out.duals = Vector(m);
  for (std::size_t a = 0; a < k; ++a) out.duals[active[a]] = z_active[a];
  out.x = program.apply_gt(out.duals);
  for (std::size_t j = 0; j < n; ++j) out.x[j] = -(out.x[j] + c[j]) / (2.0 * eps);
  if (!all_finite(out.x) || !all_finite(out.duals)) return std::nullopt;
  return out;
}

// Polish from the interior iterate: start from the rows whose dual dominates
// the slack, then repair the guess a few times (add violated rows, drop rows
// with negative duals). Ties at the threshold (slack and dual both near zero)
// are common at equilibria of coupled loops and need the repair step.
std::optional<PrimalDualSolution> polish(const ConvexProgram& program, const Vector& c,
                                         const Iterate& it, std::size_t iterations) {
  if (program.reg_eps() <= 0.0) return std::nullopt;
  const Vector& h = program.ineq_h();
  const std::size_t m = program.constraint_count();
  const double dual_tol = 1e-10 * (1.0 + norm_inf(c));

  std::vector<bool> in_set(m, false);
  for (std::size_t r = 0; r < m; ++r) in_set[r] = it.z[r] > it.s[r];

  constexpr int kRepairRounds = 6;
  for (int round = 0; round <= kRepairRounds; ++round) {
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < m; ++r) {
      if (in_set[r]) active.push_back(r);
    }
    const auto trial = solve_on_active_set(program, c, active);
    if (!trial) return std::nullopt;

    const Vector gx = program.apply_g(trial->x);
    bool changed = false;
    for (std::size_t r = 0; r < m; ++r) {
      if (!in_set[r] && !(gx[r] - h[r] <= 1e-9 * (1.0 + std::abs(h[r])))) {
        in_set[r] = true;
        changed = true;
      } else if (in_set[r] && trial->duals[r] < -dual_tol) {
        in_set[r] = false;
        changed = true;
      }
    }
    if (changed) continue;

    Vector duals = trial->duals;
    for (double& z : duals) z = std::max(0.0, z);
    PrimalDualSolution sol = finish(program, c, trial->x, std::move(duals), iterations, true);
    if (!(sol.kkt_residual <= 1e-8 * (1.0 + norm_inf(c)))) return std::nullopt;
    return sol;
  }
  return std::nullopt;
}

}  // namespace

PrimalDualSolution solve(const ConvexProgram& program, const Vector& c,
                         const SolverOptions& options) {
  const std::size_t n = program.n();
  const std::size_t m = program.constraint_count();
  require(c.size() == n, ErrorCode::kShapeMismatch, "solve: len(c) must equal n");
  require(all_finite(c), ErrorCode::kInvalidArgument, "solve: c must be finite");
  const double eps = program.reg_eps();
  const auto& rows = program.sparse_rows();
  const Vector& h = program.ineq_h();

  if (m == 0) {
    require(eps > 0.0, ErrorCode::kInvalidArgument, "solve: unconstrained program needs reg_eps > 0");
    Vector x = (-1.0 / (2.0 * eps)) * c;
    return finish(program, c, std::move(x), Vector(), 0, true);
  }

  const double c_scale = 1.0 + norm_inf(c);
  const double h_scale = 1.0 + norm_inf(h);

  // Normal-equations matrix Q + GᵀWG, built from the sparse rows.
  auto normal_matrix = [&](const Vector& w, double ridge) {
    Matrix nm(n, n);
    for (std::size_t j = 0; j < n; ++j) nm(j, j) = 2.0 * eps + ridge;
    for (std::size_t r = 0; r < m; ++r) {
      const double wr = w[r];
      for (const auto& a : rows[r]) {
        const double wa = wr * a.value;
        double* row = &nm(a.col, 0);
        for (const auto& b : rows[r]) row[b.col] += wa * b.value;
      }
    }
    return nm;
  };
  auto factor = [&](const Vector& w) {
    try {
      return numerics::Cholesky(normal_matrix(w, 0.0));
    } catch (const Error&) {
      double diag = 0.0;
      const Matrix nm = normal_matrix(w, 0.0);
      for (std::size_t j = 0; j < n; ++j) diag = std::max(diag, nm(j, j));
      return numerics::Cholesky(normal_matrix(w, 1e-12 * (1.0 + diag)));
    }
  };

  // Starting point: least-squares-ish x from (Q + GᵀG)·x = Gᵀh − c, then
  // slacks shifted to be positive and unit duals.
  Iterate it;
  {
    const numerics::Cholesky chol = factor(Vector(m, 1.0));
    Vector rhs = program.apply_gt(h) - c;
    it.x = chol.solve(rhs);
    const Vector gx = program.apply_g(it.x);
    it.s = Vector(m);
    double min_s = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      it.s[r] = h[r] - gx[r];
      min_s = std::min(min_s, it.s[r]);
    }
    const double shift = min_s > 0.0 ? 0.0 : 1.0 - min_s;
    for (std::size_t r = 0; r < m; ++r) it.s[r] = std::max(it.s[r] + shift, 1e-2);
    it.z = Vector(m, 1.0);
  }

  std::size_t iteration = 0;
  std::vector<std::size_t> last_failed_active;
  double last_rp = 0.0;
  for (; iteration < options.max_iterations; ++iteration) {
    // Residuals.
    Vector r_d = program.apply_gt(it.z);
    for (std::size_t j = 0; j < n; ++j) r_d[j] += c[j] + 2.0 * eps * it.x[j];
    Vector r_p = program.apply_g(it.x);
    for (std::size_t r = 0; r < m; ++r) r_p[r] += it.s[r] - h[r];
    double mu = 0.0;
    for (std::size_t r = 0; r < m; ++r) mu += it.s[r] * it.z[r];
    mu /= static_cast<double>(m);
    const double rp_norm = norm_inf(r_p);
    const double rd_norm = norm_inf(r_d);
    last_rp = rp_norm / h_scale;

    if (!std::isfinite(mu) || !std::isfinite(rp_norm) || !std::isfinite(rd_norm)) break;

    const bool converged = mu <= options.duality_tolerance &&
                           rp_norm <= options.residual_tolerance * h_scale &&
                           rd_norm <= options.residual_tolerance * c_scale;
    const bool near = mu <= 1e-5 && rp_norm <= 1e-6 * h_scale && rd_norm <= 1e-6 * c_scale;
    if (options.polish && (near || converged)) {
      std::vector<std::size_t> active;
      for (std::size_t r = 0; r < m; ++r) {
        if (it.z[r] > it.s[r]) active.push_back(r);
      }
      if (converged || active != last_failed_active) {
        if (auto p = polish(program, c, it, iteration)) return *std::move(p);
        last_failed_active = std::move(active);
      }
    }
    if (converged) {
      Vector x = it.x;
      return finish(program, c, std::move(x), it.z, iteration, false);
    }

    Vector w(m);
    for (std::size_t r = 0; r < m; ++r) w[r] = it.z[r] / it.s[r];
    std::optional<numerics::Cholesky> factored;
    try {
      factored.emplace(factor(w));
    } catch (const Error&) {
      break;  // normal equations lost definiteness; fall through to the last polish
    }
    const numerics::Cholesky& chol = *factored;

    // Direction for a complementarity target r_c (s∘z − target).
    auto direction = [&](const Vector& r_c, Vector& dx, Vector& ds, Vector& dz) {
      Vector t(m);
      for (std::size_t r = 0; r < m; ++r) t[r] = w[r] * r_p[r] - r_c[r] / it.s[r];
      Vector rhs = program.apply_gt(t);
      for (std::size_t j = 0; j < n; ++j) rhs[j] = -r_d[j] - rhs[j];
      dx = chol.solve(rhs);
      const Vector gdx = program.apply_g(dx);
      ds = Vector(m);
      dz = Vector(m);
      for (std::size_t r = 0; r < m; ++r) {
        ds[r] = -r_p[r] - gdx[r];
        dz[r] = w[r] * (gdx[r] + r_p[r]) - r_c[r] / it.s[r];
      }
    };

    Vector dx, ds, dz;
    Vector r_c(m);
    for (std::size_t r = 0; r < m; ++r) r_c[r] = it.s[r] * it.z[r];
    direction(r_c, dx, ds, dz);
    const double a_aff = std::min(max_step(it.s, ds), max_step(it.z, dz));
    double mu_aff = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      mu_aff += (it.s[r] + a_aff * ds[r]) * (it.z[r] + a_aff * dz[r]);
    }
    mu_aff /= static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);
    for (std::size_t r = 0; r < m; ++r) {
      r_c[r] = it.s[r] * it.z[r] + ds[r] * dz[r] - sigma * mu;
    }
    direction(r_c, dx, ds, dz);

    const double alpha = std::min(1.0, 0.99 * std::min(max_step(it.s, ds), max_step(it.z, dz)));
    for (std::size_t j = 0; j < n; ++j) it.x[j] += alpha * dx[j];
    for (std::size_t r = 0; r < m; ++r) {
      it.s[r] += alpha * ds[r];
      it.z[r] += alpha * dz[r];
    }
  }

  if (options.polish) {
    if (auto p = polish(program, c, it, iteration)) return *std::move(p);
  }
  PrimalDualSolution best = finish(program, c, it.x, it.z, iteration, false);
  if (last_rp > 1e-6) {
    throw SolverError(ErrorCode::kInfeasible,
                      "solve: primal residual stalled at " + std::to_string(last_rp) +
                          " (constraints look infeasible)",
                      std::move(best));
  }
  const double residual = best.kkt_residual;
  throw SolverError(ErrorCode::kMaxIterations,
                    "solve: no convergence after " + std::to_string(iteration) +
                        " iterations (kkt residual " + std::to_string(residual) + ")",
                    std::move(best));
}

}  // namespace rdfl::optlayer
