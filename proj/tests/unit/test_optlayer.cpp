#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rdfl/error.hpp"
#include "rdfl/numerics/linalg.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/optlayer/program.hpp"
#include "rdfl/optlayer/program_io.hpp"
#include "rdfl/optlayer/sensitivity.hpp"
#include "rdfl/optlayer/solver.hpp"

namespace {

using rdfl::ErrorCode;
using rdfl::Matrix;
using rdfl::Vector;
using rdfl::numerics::Rng;
using namespace rdfl::optlayer;

void expect_invariants(const ConvexProgram& program, const Vector& c, const PrimalDualSolution& sol) {
  const KktResiduals r = kkt_residuals(program, c, sol);
  EXPECT_LE(r.primal, 1e-7);
  EXPECT_LE(r.dual_sign, 1e-9);
  EXPECT_LE(r.complementarity, 1e-7);
  EXPECT_LE(r.stationarity, 1e-7);
  EXPECT_NEAR(sol.objective_value, program.objective(c, sol.x), 1e-9);
}

ConvexProgram box_program(std::size_t n, double bound, double eps) {
  Matrix g(2 * n, n);
  Vector h(2 * n, bound);
  for (std::size_t i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    g(n + i, i) = -1.0;
  }
  return ConvexProgram::generic(g, h, eps);
}

ConvexProgram small_newsvendor(double eps) {
  return build_newsvendor_program(4, 5.0, 30.0, Vector(4, 0.0), Vector(4, 10.0), eps);
}

double max_entry_rel_err(const Matrix& a, const Matrix& b) {
  return rdfl::max_abs(a - b) / std::max(rdfl::max_abs(b), 1e-8);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const rdfl::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(BuildNewsvendor, KktDimensionsMatchTable) {
  for (auto [n, dim] : {std::pair{10u, 32u}, {50u, 152u}, {100u, 302u}}) {
    const auto p = build_newsvendor_program(n, 0.0, 1e9, Vector(n, 0.0), Vector(n, 1.0), 1e-2);
    EXPECT_EQ(p.kkt_dimension(), dim);
    EXPECT_EQ(p.constraint_count(), 2 + 2 * n);
  }
}

TEST(BuildNewsvendor, WitnessIsFeasible) {
  const auto p = build_newsvendor_program(2, 1.0, 2.0, Vector(2, 0.0), Vector(2, 1.0), 1e-2);
  const Vector gx = p.apply_g(Vector{0.5, 0.5});
  for (std::size_t r = 0; r < gx.size(); ++r) EXPECT_LE(gx[r], p.ineq_h()[r]);
  const Vector x0 = p.initial_point();
  const Vector g0 = p.apply_g(x0);
  for (std::size_t r = 0; r < g0.size(); ++r) EXPECT_LT(g0[r], p.ineq_h()[r]) << r;
}

TEST(BuildNewsvendor, ContradictoryBoundsRejected) {
  EXPECT_EQ(code_of([] { build_newsvendor_program(2, 3.0, 2.0, Vector(2, 0.0), Vector(2, 1.0), 1e-2); }),
            ErrorCode::kInfeasibleSpec);
  EXPECT_EQ(code_of([] { build_newsvendor_program(2, 3.0, 4.0, Vector(2, 0.0), Vector(2, 1.0), 1e-2); }),
            ErrorCode::kInfeasibleSpec);
  EXPECT_EQ(code_of([] { build_newsvendor_program(2, 0.0, 1.0, Vector(2, 1.0), Vector(2, 2.0), 1e-2); }),
            ErrorCode::kInfeasibleSpec);
  EXPECT_EQ(code_of([] { build_newsvendor_program(2, 0.0, 4.0, Vector{0, 3}, Vector{1, 2}, 1e-2); }),
            ErrorCode::kInfeasibleSpec);
}

TEST(BuildNewsvendor, InitialPointInsideWhenMidpointViolatesTotal) {
  const auto p = build_newsvendor_program(3, 20.0, 25.0, Vector(3, 0.0), Vector(3, 10.0), 1e-2);
  const Vector x0 = p.initial_point();
  const double total = x0[0] + x0[1] + x0[2];
  EXPECT_GT(total, 20.0);
  EXPECT_LT(total, 25.0);
}

TEST(BuildMatching, KktDimensionsMatchTable) {
  for (auto [players, dim] : {std::pair{4u, 57u}, {15u, 706u}, {30u, 2761u}}) {
    const auto p = build_matching_program(players, 1.0, 1e-2);
    EXPECT_EQ(p.kkt_dimension(), dim);
    EXPECT_EQ(p.n(), players * players);
    EXPECT_EQ(p.constraint_count(), 2 * players + 1 + 2 * players * players);
  }
}

TEST(BuildMatching, Rejections) {
  EXPECT_EQ(code_of([] { build_matching_program(3, 4.0, 1e-2); }), ErrorCode::kInfeasibleSpec);
  EXPECT_EQ(code_of([] { build_matching_program(3, -1.0, 1e-2); }), ErrorCode::kInfeasibleSpec);
  EXPECT_EQ(code_of([] { build_matching_program(3, 1.0, 0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { build_matching_program(0, 0.0, 1e-2); }), ErrorCode::kInvalidArgument);
}

TEST(BuildMatching, RowLayout) {
  const auto p = build_matching_program(2, 1.0, 1e-2);
  // Column-sum row 0 picks x_00 and x_10; row-sum row 2 picks x_00 and x_01.
  EXPECT_EQ(Vector(p.ineq_g().row(0)), (Vector{1, 0, 1, 0}));
  EXPECT_EQ(Vector(p.ineq_g().row(2)), (Vector{1, 1, 0, 0}));
  EXPECT_EQ(Vector(p.ineq_g().row(4)), (Vector{-1, -1, -1, -1}));
  EXPECT_DOUBLE_EQ(p.ineq_h()[4], -1.0);
}

TEST(GenericProgram, Validation) {
  EXPECT_EQ(code_of([] { ConvexProgram::generic(Matrix{{1.0}}, Vector{1.0}, 1.0); }),
            ErrorCode::kInfeasibleSpec);
  EXPECT_EQ(code_of([] { ConvexProgram::generic(Matrix{{1.0}, {-1.0}}, Vector{-1.0, -1.0}, 1.0); }),
            ErrorCode::kInfeasibleSpec);
  // Unit square plus x1 + x2 ≥ 3.
  EXPECT_EQ(code_of([] {
              ConvexProgram::generic(Matrix{{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {-1, -1}},
                                     Vector{1, 1, 0, 0, -3}, 1.0);
            }),
            ErrorCode::kInfeasibleSpec);
  const auto ok = ConvexProgram::generic(Matrix{{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {-1, -1}},
                                         Vector{1, 1, 0, 0, -1}, 1.0);
  const Vector g0 = ok.apply_g(ok.initial_point());
  for (std::size_t r = 0; r < g0.size(); ++r) EXPECT_LT(g0[r], ok.ineq_h()[r]);
}

TEST(Solve, InteriorOptimumOfBox) {
  const auto p = box_program(1, 10.0, 1.0);
  const auto sol = solve(p, Vector{2.0});
  EXPECT_NEAR(sol.x[0], -1.0, 1e-9);
  expect_invariants(p, Vector{2.0}, sol);
}

TEST(Solve, CheapestNewsvendorProductSaturates) {
  const auto p = build_newsvendor_program(2, 1.0, 2.0, Vector(2, 0.0), Vector(2, 1.0), 1e-6);
  const Vector c{1.0, 2.0};
  const auto sol = solve(p, c);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-6);
  EXPECT_NEAR(sol.x[1], 0.0, 1e-6);
  EXPECT_NEAR(sol.objective_value, 1.0, 1e-5);
  expect_invariants(p, c, sol);
}

TEST(Solve, TwoPlayerMatchingPicksDiagonal) {
  const auto p = build_matching_program(2, 2.0, 1e-4);
  const Vector q{1, 2, 3, 1};
  const auto sol = solve(p, q);
  const Vector want{1, 0, 0, 1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sol.x[i], want[i], 1e-6);
  expect_invariants(p, q, sol);
}

TEST(Solve, WrongLengthRejected) {
  EXPECT_EQ(code_of([] { solve(box_program(2, 1.0, 1.0), Vector{1.0}); }), ErrorCode::kShapeMismatch);
}

TEST(Solve, InvariantsAndArgminOnRandomInstances) {
  Rng rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const bool matching = trial % 2 == 1;
    const ConvexProgram p = matching
        ? build_matching_program(3, 1.0, rng.uniform(1e-3, 1e-1))
        : build_newsvendor_program(5, 10.0, 30.0, Vector(5, 0.0), Vector(5, 8.0), rng.uniform(1e-3, 1e-1));
    const Vector c = rng.uniform_vector(p.n(), -2.0, 2.0);
    const auto sol = solve(p, c);
    expect_invariants(p, c, sol);
    const double best = p.objective(c, sol.x);
    int sampled = 0;
    while (sampled < 100) {
      Vector x = matching ? rng.uniform_vector(p.n(), 0.0, 1.0 / 3.0) : rng.uniform_vector(p.n(), 0.0, 8.0);
      const Vector gx = p.apply_g(x);
      bool feasible = true;
      for (std::size_t r = 0; r < gx.size(); ++r) feasible = feasible && gx[r] <= p.ineq_h()[r];
      if (!feasible) continue;
      ++sampled;
      EXPECT_LE(best, p.objective(c, x) + 1e-6);
    }
  }
}

TEST(Solve, LargerInstancesConverge) {
  Rng rng(2);
  const auto nv = build_newsvendor_program(100, 500.0, 4000.0, Vector(100, 0.0), Vector(100, 60.0), 1e-2);
  const Vector c1 = rng.uniform_vector(100, -2.0, 2.0);
  expect_invariants(nv, c1, solve(nv, c1));
  const auto mt = build_matching_program(8, 4.0, 1e-2);
  const Vector c2 = rng.uniform_vector(64, 0.0, 3.0);
  expect_invariants(mt, c2, solve(mt, c2));
}

TEST(KktSensitivity, InteriorClosedForm) {
  for (double eps : {1.0, 0.25, 3.0}) {
    const auto p = box_program(3, 100.0, eps);
    const auto sol = solve(p, Vector{1.0, -2.0, 0.5});
    const Matrix s = kkt_sensitivity(p, sol);
    EXPECT_LE(rdfl::max_abs(s - (-1.0 / (2.0 * eps)) * Matrix::identity(3)), 1e-6);
  }
}

TEST(KktSensitivity, DoublingEpsHalvesInterior) {
  const Vector c{0.3, -0.7};
  const auto p1 = box_program(2, 50.0, 0.5);
  const auto p2 = box_program(2, 50.0, 1.0);
  const Matrix s1 = kkt_sensitivity(p1, solve(p1, c));
  const Matrix s2 = kkt_sensitivity(p2, solve(p2, c));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      if (s1(i, j) != 0.0) EXPECT_NEAR(s2(i, j) / s1(i, j), 0.5, 1e-6);
}

TEST(KktSensitivity, PinnedCoordinateRowIsZero) {
  const auto p = build_newsvendor_program(2, 0.0, 2.0, Vector(2, 0.0), Vector{1.0, 5.0}, 0.5);
  // Unconstrained optimum −c/(2ε) = [5, 0.5]; coordinate 0 is pinned at s2 = 1.
  const auto sol = solve(p, Vector{-5.0, -0.5});
  EXPECT_NEAR(sol.x[0], 1.0, 1e-9);
  EXPECT_GT(sol.duals[2 + 2], 1.0);
  const Matrix s = kkt_sensitivity(p, sol);
  EXPECT_LE(std::abs(s(0, 0)) + std::abs(s(0, 1)), 1e-9);
  EXPECT_NEAR(s(1, 1), -1.0, 1e-9);
}

TEST(KktSensitivity, AssembledMatrixBlocks) {
  const auto p = small_newsvendor(1e-2);
  const auto sol = solve(p, Vector{0.1, -0.2, 0.3, -0.4});
  const Matrix m = assemble_kkt_matrix(p, sol);
  ASSERT_EQ(m.rows(), 3u * 4 + 2);
  EXPECT_DOUBLE_EQ(m(0, 0), 2e-2);
  EXPECT_DOUBLE_EQ(m(0, 4), -1.0);  // Gᵀ block, 1ᵀx ≥ T1 row
  EXPECT_DOUBLE_EQ(m(4, 0), -sol.duals[0]);
}

TEST(KktSensitivity, DegenerateActiveSetIsSingular) {
  // Unconstrained optimum lands exactly on the bound: zero slack and zero dual.
  const auto p = box_program(1, 10.0, 1.0);
  const auto sol = solve(p, Vector{-20.0});
  EXPECT_NEAR(sol.x[0], 10.0, 1e-9);
  EXPECT_EQ(code_of([&] { kkt_sensitivity(p, sol); }), ErrorCode::kSingularKkt);
}

TEST(KktSensitivity, RejectsUnconvergedSolution) {
  const auto p = box_program(1, 10.0, 1.0);
  auto sol = solve(p, Vector{1.0});
  sol.kkt_residual = 1e-3;
  EXPECT_EQ(code_of([&] { kkt_sensitivity(p, sol); }), ErrorCode::kInvalidArgument);
}

bool non_degenerate(const ConvexProgram& p, const PrimalDualSolution& sol, double gap) {
  const Vector gx = p.apply_g(sol.x);
  for (std::size_t r = 0; r < gx.size(); ++r) {
    if (std::max(sol.duals[r], p.ineq_h()[r] - gx[r]) <= gap) return false;
  }
  return true;
}

// ≥ 30 random non-degenerate instances against a central-difference oracle.
TEST(KktSensitivity, MatchesFiniteDifferencesOnRandomInstances) {
  Rng rng(1234);
  int checked = 0;
  int attempts = 0;
  while (checked < 30 && attempts < 500) {
    ++attempts;
    const auto p = small_newsvendor(1e-2);
    const Vector c = rng.uniform_vector(4, -0.25, 0.05);
    const auto sol = solve(p, c);
    if (!non_degenerate(p, sol, 1e-4)) continue;
    ++checked;
    const Matrix s = kkt_sensitivity(p, sol);
    const Matrix fd = rdfl::numerics::finite_difference_jacobian(
        [&](const Vector& cc) { return solve(p, cc).x; }, c, 1e-7);
    EXPECT_LE(max_entry_rel_err(s, fd), 1e-3) << "attempt " << attempts;
  }
  EXPECT_GE(checked, 30);
}

TEST(KktSensitivity, MatchingFiniteDifferences) {
  Rng rng(55);
  int checked = 0;
  for (int attempt = 0; attempt < 100 && checked < 5; ++attempt) {
    const auto p = build_matching_program(3, 1.5, 0.05);
    const Vector c = rng.uniform_vector(9, 0.0, 0.2);
    const auto sol = solve(p, c);
    if (!non_degenerate(p, sol, 1e-4)) continue;
    ++checked;
    const Matrix fd = rdfl::numerics::finite_difference_jacobian(
        [&](const Vector& cc) { return solve(p, cc).x; }, c, 1e-7);
    EXPECT_LE(max_entry_rel_err(kkt_sensitivity(p, sol), fd), 1e-3);
  }
  EXPECT_GE(checked, 1);
}

TEST(ProgramJson, RoundTrip) {
  const ProgramSpec nv = NewsvendorSpec{3, 1.0, 9.0, Vector{0, 0, 0}, Vector{5, 5, 5}, 0.02};
  const auto j = spec_to_json(nv);
  EXPECT_EQ(j["tag"], "newsvendor");
  const auto back = std::get<NewsvendorSpec>(spec_from_json(j));
  EXPECT_EQ(back.n, 3u);
  EXPECT_EQ(back.s2, (Vector{5, 5, 5}));
  EXPECT_EQ(back.reg_eps, 0.02);

  const ProgramSpec mt = MatchingSpec{4, 2.0, 0.1};
  const auto back2 = std::get<MatchingSpec>(spec_from_json(spec_to_json(mt)));
  EXPECT_EQ(back2.players, 4u);
  EXPECT_EQ(back2.S, 2.0);
  EXPECT_EQ(build_program(back2).kkt_dimension(), 57u);

  EXPECT_EQ(code_of([] { spec_from_json({{"tag", "lp"}}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([] { spec_from_json({{"tag", "matching"}}); }), ErrorCode::kConfigError);
}

}  // namespace
