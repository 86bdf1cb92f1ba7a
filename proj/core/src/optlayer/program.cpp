#include "rdfl/optlayer/program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/optlayer/solver.hpp"

namespace rdfl::optlayer {

std::string_view to_string(ProblemTag tag) noexcept {
  switch (tag) {
    case ProblemTag::kNewsvendor: return "newsvendor";
    case ProblemTag::kMatching: return "matching";
    case ProblemTag::kGeneric: return "generic";
  }
  return "unknown";
}

ConvexProgram::ConvexProgram(Matrix ineq_g, Vector ineq_h, double reg_eps, ProblemTag tag)
    : ineq_g_(std::move(ineq_g)), ineq_h_(std::move(ineq_h)), reg_eps_(reg_eps), tag_(tag) {
  require(ineq_g_.rows() == ineq_h_.size(), ErrorCode::kShapeMismatch,
          "constraint matrix and right-hand side disagree in rows");
  require(ineq_g_.cols() > 0, ErrorCode::kInvalidArgument, "program needs n >= 1");
  require(std::isfinite(reg_eps_) && reg_eps_ >= 0.0, ErrorCode::kInvalidArgument,
          "reg_eps must be finite and >= 0");
  require(all_finite(ineq_g_) && all_finite(ineq_h_), ErrorCode::kInvalidArgument,
          "constraint data must be finite");
  rows_.resize(ineq_g_.rows());
  for (std::size_t r = 0; r < ineq_g_.rows(); ++r) {
    for (std::size_t j = 0; j < ineq_g_.cols(); ++j) {
      const double v = ineq_g_(r, j);
      if (v != 0.0) rows_[r].push_back({static_cast<std::uint32_t>(j), v});
    }
  }
}

double ConvexProgram::objective(const Vector& c, const Vector& x) const {
  require(c.size() == n() && x.size() == n(), ErrorCode::kShapeMismatch,
          "objective: dimension mismatch");
  return dot(c, x) + reg_eps_ * dot(x, x);
}

Vector ConvexProgram::apply_g(const Vector& x) const {
  require(x.size() == n(), ErrorCode::kShapeMismatch, "apply_g: dimension mismatch");
  Vector out(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    double acc = 0.0;
    for (const auto& e : rows_[r]) acc += e.value * x[e.col];
    out[r] = acc;
  }
  return out;
}

Vector ConvexProgram::apply_gt(const Vector& y) const {
  require(y.size() == rows_.size(), ErrorCode::kShapeMismatch, "apply_gt: dimension mismatch");
  Vector out(n());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (const auto& e : rows_[r]) out[e.col] += e.value * yr;
  }
  return out;
}

namespace {

// Per-coordinate bounds implied by single-entry rows; infinite where absent.
std::pair<Vector, Vector> implied_box(const ConvexProgram& p) {
  const double inf = std::numeric_limits<double>::infinity();
  Vector lo(p.n(), -inf);
  Vector hi(p.n(), inf);
  const auto& rows = p.sparse_rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != 1) continue;
    const auto& e = rows[r][0];
    const double bound = p.ineq_h()[r] / e.value;
    if (e.value > 0.0) {
      hi[e.col] = std::min(hi[e.col], bound);
    } else {
      lo[e.col] = std::max(lo[e.col], bound);
    }
  }
  return {lo, hi};
}

}  // namespace

ConvexProgram ConvexProgram::generic(Matrix ineq_g, Vector ineq_h, double reg_eps) {
  ConvexProgram program(std::move(ineq_g), std::move(ineq_h), reg_eps, ProblemTag::kGeneric);
  const std::size_t n = program.n();
  const std::size_t m = program.constraint_count();

  auto [lo, hi] = implied_box(program);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j])) {
      fail(ErrorCode::kInfeasibleSpec,
           "generic program: coordinate " + std::to_string(j) +
               " lacks a finite lower and upper bound row");
    }
    if (lo[j] > hi[j]) {
      fail(ErrorCode::kInfeasibleSpec,
           "generic program: empty bound interval for coordinate " + std::to_string(j));
    }
  }

  // Phase one over (x, t): min t  s.t.  G·x − t ≤ h,  −t ≤ 1.
  // The tiny quadratic term keeps the auxiliary problem strongly convex.
  Matrix g1(m + 1, n + 1);
  Vector h1(m + 1);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) g1(r, j) = program.ineq_g_(r, j);
    g1(r, n) = -1.0;
    h1[r] = program.ineq_h_[r];
  }
  g1(m, n) = -1.0;
  h1[m] = 1.0;
  ConvexProgram phase_one(std::move(g1), std::move(h1), 1e-8, ProblemTag::kGeneric);
  Vector c1(n + 1);
  c1[n] = 1.0;

  PrimalDualSolution sol;
  try {
    sol = solve(phase_one, c1);
  } catch (const Error& e) {
    fail(ErrorCode::kInfeasibleSpec, std::string("generic program: phase-one solve failed: ") +
                                         e.what());
  }
  const double t = sol.x[n];
  if (t > 1e-7) {
    fail(ErrorCode::kInfeasibleSpec,
         "generic program: constraints are infeasible (phase-one value " + std::to_string(t) + ")");
  }
  program.initial_point_ = slice(sol.x, 0, n);
  program.box_ = std::make_pair(std::move(lo), std::move(hi));
  return program;
}

ConvexProgram build_newsvendor_program(std::size_t n, double T1, double T2, const Vector& s1,
                                       const Vector& s2, double reg_eps) {
  require(n >= 1, ErrorCode::kInvalidArgument, "newsvendor: n must be >= 1");
  require(s1.size() == n && s2.size() == n, ErrorCode::kShapeMismatch,
          "newsvendor: bound vectors must have length n");
  require(std::isfinite(T1) && std::isfinite(T2) && all_finite(s1) && all_finite(s2),
          ErrorCode::kInvalidArgument, "newsvendor: bounds must be finite");
  if (T1 > T2) fail(ErrorCode::kInfeasibleSpec, "newsvendor: T1 > T2");
  double sum_lo = 0.0;
  double sum_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (s1[i] > s2[i]) {
      fail(ErrorCode::kInfeasibleSpec, "newsvendor: s1 > s2 at index " + std::to_string(i));
    }
    sum_lo += s1[i];
    sum_hi += s2[i];
  }
  if (sum_lo > T2) fail(ErrorCode::kInfeasibleSpec, "newsvendor: sum(s1) > T2");
  if (sum_hi < T1) fail(ErrorCode::kInfeasibleSpec, "newsvendor: sum(s2) < T1");

  const std::size_t m = 2 + 2 * n;
  Matrix g(m, n);
  Vector h(m);
  for (std::size_t j = 0; j < n; ++j) {
    g(0, j) = -1.0;
    g(1, j) = 1.0;
    g(2 + j, j) = -1.0;
    g(2 + n + j, j) = 1.0;
    h[2 + j] = -s1[j];
    h[2 + n + j] = s2[j];
  }
  h[0] = -T1;
  h[1] = T2;

  ConvexProgram program(std::move(g), std::move(h), reg_eps, ProblemTag::kNewsvendor);
  program.spec_ = NewsvendorSpec{n, T1, T2, s1, s2, reg_eps};
  program.box_ = std::make_pair(s1, s2);

  // Box midpoint, shifted uniformly (with clamping) so the total lands inside
  // the attainable part of [T1, T2].
  Vector mid(n);
  double mid_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mid[i] = 0.5 * (s1[i] + s2[i]);
    mid_sum += mid[i];
  }
  if ((mid_sum <= T1 || mid_sum >= T2) && T1 < T2) {
    const double target = 0.5 * (std::max(T1, sum_lo) + std::min(T2, sum_hi));
    auto clamped_sum = [&](double shift) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += std::clamp(mid[i] + shift, s1[i], s2[i]);
      return acc;
    };
    double width = 0.0;
    for (std::size_t i = 0; i < n; ++i) width = std::max(width, s2[i] - s1[i]);
    double a = -width;
    double b = width;
    for (int it = 0; it < 200; ++it) {
      const double c = 0.5 * (a + b);
      if (clamped_sum(c) < target) a = c; else b = c;
    }
    const double shift = 0.5 * (a + b);
    for (std::size_t i = 0; i < n; ++i) mid[i] = std::clamp(mid[i] + shift, s1[i], s2[i]);
  }
  program.initial_point_ = std::move(mid);
  return program;
}

ConvexProgram build_matching_program(std::size_t players, double S, double reg_eps) {
  require(players >= 1, ErrorCode::kInvalidArgument, "matching: players must be >= 1");
  require(std::isfinite(S), ErrorCode::kInvalidArgument, "matching: S must be finite");
  require(reg_eps > 0.0, ErrorCode::kInvalidArgument, "matching: reg_eps must be > 0");
  if (S < 0.0 || S > static_cast<double>(players)) {
    fail(ErrorCode::kInfeasibleSpec, "matching: S must lie in [0, players]");
  }
  const std::size_t p = players;
  const std::size_t n = p * p;
  const std::size_t m = 2 * p + 1 + 2 * n;
  Matrix g(m, n);
  Vector h(m);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t k = i * p + j;
      g(j, k) = 1.0;      // column sum j
      g(p + i, k) = 1.0;  // row sum i
      g(2 * p, k) = -1.0;
      g(2 * p + 1 + k, k) = -1.0;
      g(2 * p + 1 + n + k, k) = 1.0;
      h[2 * p + 1 + n + k] = 1.0;
    }
    h[i] = 1.0;
    h[p + i] = 1.0;
  }
  h[2 * p] = -S;

  ConvexProgram program(std::move(g), std::move(h), reg_eps, ProblemTag::kMatching);
  program.spec_ = MatchingSpec{players, S, reg_eps};
  program.box_ = std::make_pair(Vector(n, 0.0), Vector(n, 1.0));
  const double pp = static_cast<double>(p);
  const double u = 0.5 * (S / (pp * pp) + 1.0 / pp);
  program.initial_point_ = Vector(n, u);
  return program;
}

ConvexProgram build_program(const ProgramSpec& spec) {
  if (const auto* nv = std::get_if<NewsvendorSpec>(&spec)) {
    return build_newsvendor_program(nv->n, nv->T1, nv->T2, nv->s1, nv->s2, nv->reg_eps);
  }
  const auto& mt = std::get<MatchingSpec>(spec);
  return build_matching_program(mt.players, mt.S, mt.reg_eps);
}

}  // namespace rdfl::optlayer
