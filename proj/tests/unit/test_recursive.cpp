#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "../support/affine_layer.hpp"
#include "rdfl/error.hpp"
#include "rdfl/harness/gradcheck.hpp"
#include "rdfl/numerics/linalg.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/recursive/coupled_layer.hpp"
#include "rdfl/recursive/equivalence.hpp"
#include "rdfl/recursive/fixed_point.hpp"
#include "rdfl/recursive/instrumentation.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace {

using rdfl::ErrorCode;
using rdfl::Matrix;
using rdfl::Vector;
using rdfl::numerics::Rng;
using rdfl::testing::AffineLayer;
using rdfl::testing::TanhLayer;
using namespace rdfl::recursive;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const rdfl::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

FixedPointOptions tight(double damping = 1.0) {
  return {.tol = 1e-12, .max_iter = 10000, .damping = damping, .linearize_at_solution = true};
}

Matrix random_contraction(Rng& rng, std::size_t n, double rho) {
  Matrix a = rng.uniform_matrix(n, n, -1.0, 1.0);
  const double r = rdfl::numerics::spectral_radius_estimate(a).rho;
  return (rho / r) * a;
}

Matrix random_symmetric_with_radius(Rng& rng, std::size_t n, double rho) {
  Matrix a = rng.uniform_matrix(n, n, -1.0, 1.0);
  Matrix s = 0.5 * (a + a.transpose());
  Eigen::MatrixXd e(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e(i, j) = s(i, j);
  const double r = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e).eigenvalues().cwiseAbs().maxCoeff();
  return (rho / r) * s;
}

TEST(UnrollForward, ZeroDepth) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const auto trace = unroll_forward(layer, Vector{3.0}, Vector{}, 0);
  ASSERT_EQ(trace.x_seq.size(), 1u);
  EXPECT_EQ(trace.x_seq[0], Vector{3.0});
  EXPECT_TRUE(trace.steps.empty());
}

TEST(UnrollForward, GeometricRecursion) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const auto trace = unroll_forward(layer, Vector{0.0}, Vector{}, 3);
  ASSERT_EQ(trace.x_seq.size(), 4u);
  EXPECT_EQ(trace.x_seq[1][0], 1.0);
  EXPECT_EQ(trace.x_seq[2][0], 1.5);
  EXPECT_EQ(trace.x_seq[3][0], 1.75);
  EXPECT_EQ(trace.residuals, (std::vector<double>{1.0, 0.5, 0.25}));
  EXPECT_EQ(trace.c_seq.size(), 3u);
}

TEST(UnrollForward, DefaultDepth) { EXPECT_EQ(kDefaultUnrollDepth, 10u); }

TEST(UnrollForward, StepIndexInErrors) {
  struct Failing final : RecursiveLayer {
    std::size_t dim() const override { return 1; }
    std::size_t param_count() const override { return 0; }
    StepOutput apply(const Vector& x, const Vector&) const override { return {x, x}; }
    Linearization linearize(const Vector& x, const Vector&) const override {
      if (x[0] > 1.5) rdfl::fail(ErrorCode::kSingularKkt, "boom");
      return {Vector{x[0] + 1.0}, x, Matrix{{1.0}}, [](const Vector& u) { return u; }};
    }
  } layer;
  try {
    unroll_forward(layer, Vector{0.0}, Vector{}, 5);
    FAIL();
  } catch (const rdfl::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularKkt);
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos) << e.what();
  }
}

TEST(UnrollGradient, ScalarGeometricSeries) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const Vector g = unroll_gradient(unroll_forward(layer, Vector{0.0}, Vector{}, 3), Vector{1.0});
  EXPECT_DOUBLE_EQ(g[0], 1.75);
}

TEST(UnrollGradient, SingleStepIsChainRule) {
  Rng rng(4);
  const Matrix a = rng.uniform_matrix(3, 3, -1, 1);
  const Matrix b = rng.uniform_matrix(3, 2, -1, 1);
  const AffineLayer layer(a, b, Vector{0.3, -0.2});
  const Vector lg{1.0, 2.0, -1.0};
  const Vector g = unroll_gradient(unroll_forward(layer, Vector(3), Vector{}, 1), lg);
  EXPECT_EQ(g, rdfl::transpose_times(b, lg));
}

TEST(UnrollGradient, EmptyTraceRejected) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  EXPECT_EQ(code_of([&] { unroll_gradient(unroll_forward(layer, Vector{0.0}, Vector{}, 0), Vector{1.0}); }),
            ErrorCode::kInvalidArgument);
}

TEST(UnrollGradient, MatchesFiniteDifferencesOnNonlinearDouble) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_contraction(rng, 4, 0.7);
    const Matrix b = rng.uniform_matrix(4, 3, -1, 1);
    const Vector theta = rng.uniform_vector(3, -1, 1);
    const Vector x0 = rng.uniform_vector(4, -1, 1);
    const Vector lg = rng.normal_vector(4);
    const TanhLayer layer(a, b, theta);
    const Vector g = unroll_gradient(unroll_forward(layer, x0, Vector{}, 6), lg);
    const Vector fd = rdfl::numerics::finite_difference_gradient(
        [&](const Vector& t) {
          const TanhLayer l(a, b, t);
          Vector x = x0;
          for (int i = 0; i < 6; ++i) x = l.apply(x, Vector{}).x;
          return rdfl::dot(lg, x);
        },
        theta, 1e-6);
    EXPECT_LE(rdfl::harness::max_relative_error(g, fd, 1e-6), 1e-6);
  }
}

TEST(UnrollTrace, ReplayIsBitwise) {
  const auto inst = rdfl::harness::make_newsvendor_check_instance(21);
  const CoupledLayer layer(inst.params, inst.program);
  const auto trace = unroll_forward(layer, inst.x0, inst.v, 6);
  for (std::size_t i = 1; i < trace.x_seq.size(); ++i) {
    EXPECT_EQ(layer.apply(trace.x_seq[i - 1], inst.v).x, trace.x_seq[i]);
  }
}

TEST(FixedPoint, AffineFixedPoint) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const auto eq = fixed_point_solve(layer, Vector{0.0}, Vector{}, {.tol = 1e-10});
  EXPECT_TRUE(eq.converged);
  EXPECT_NEAR(eq.x_star[0], 2.0, 1e-9);
  EXPECT_LE(eq.residual, 1e-10);
  EXPECT_NEAR(eq.rho_hat, 0.5, 1e-6);
}

TEST(FixedPoint, IdentityReturnsImmediately) {
  const AffineLayer layer(Matrix::identity(2), Matrix(2, 1), Vector{0.0});
  const auto eq = fixed_point_solve(layer, Vector{3.0, -1.0}, Vector{});
  EXPECT_TRUE(eq.converged);
  EXPECT_EQ(eq.iterations, 0u);
  EXPECT_EQ(eq.residual, 0.0);
  EXPECT_EQ(eq.x_star, (Vector{3.0, -1.0}));
}

TEST(FixedPoint, ExpansiveMapFlagged) {
  const AffineLayer layer(Matrix{{2.0}}, Matrix{{1.0}}, Vector{1.0});
  const auto eq = fixed_point_solve(layer, Vector{0.0}, Vector{}, {.tol = 1e-8, .damping = 1.0});
  EXPECT_FALSE(eq.converged);
  EXPECT_NEAR(eq.rho_hat, 2.0, 1e-6);
  EXPECT_EQ(code_of([&] { require_converged(eq); }), ErrorCode::kNotConverged);
}

TEST(FixedPoint, ArgumentValidation) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  EXPECT_EQ(code_of([&] { fixed_point_solve(layer, Vector{0.0}, Vector{}, {.tol = 0.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { fixed_point_solve(layer, Vector{0.0}, Vector{}, {.damping = 1.5}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { fixed_point_solve(layer, Vector{0.0, 1.0}, Vector{}); }),
            ErrorCode::kShapeMismatch);
}

TEST(FixedPoint, DefaultsFollowTrainingConfiguration) {
  const FixedPointOptions o;
  EXPECT_EQ(o.tol, 0.2);
  EXPECT_EQ(o.damping, 0.5);
}

TEST(FixedPoint, ResidualsDecayGeometrically) {
  Rng rng(8);
  for (double rho : {0.3, 0.6, 0.85}) {
    const Matrix a = random_symmetric_with_radius(rng, 5, rho);
    const TanhLayer layer(a, rng.uniform_matrix(5, 2, -1, 1), Vector{0.4, -0.3});
    const auto eq = fixed_point_solve(layer, rng.uniform_vector(5, -1, 1), Vector{}, tight());
    ASSERT_TRUE(eq.converged);
    const auto& r = eq.residual_history;
    ASSERT_GE(r.size(), 12u);
    for (std::size_t k = r.size() - 10; k < r.size(); ++k) {
      if (r[k - 1] < 1e-14) continue;
      EXPECT_LE(r[k] / r[k - 1], eq.rho_hat + 0.05) << "rho " << rho << " k " << k;
    }
  }
}

TEST(ImplicitGradient, ScalarIft) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const auto eq = fixed_point_solve(layer, Vector{0.0}, Vector{}, tight());
  EXPECT_NEAR(implicit_gradient(layer, eq, Vector{}, Vector{1.0})[0], 2.0, 1e-12);
}

TEST(ImplicitGradient, NoFeedbackIsPlainChainRule) {
  Rng rng(2);
  const Matrix b = rng.uniform_matrix(3, 2, -1, 1);
  const AffineLayer layer(Matrix(3, 3), b, Vector{1.0, 2.0});
  const auto eq = fixed_point_solve(layer, Vector(3), Vector{}, tight());
  const Vector lg{0.5, -1.0, 2.0};
  const Vector g = implicit_gradient(layer, eq, Vector{}, lg);
  const Vector want = rdfl::transpose_times(b, lg);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(g[i], want[i], 1e-14);
}

TEST(ImplicitGradient, GuardsAndPreconditions) {
  const AffineLayer expansive(Matrix{{-1.5}}, Matrix{{1.0}}, Vector{1.0});
  // Damped iteration still converges for a negative slope; the guard must trip.
  const auto eq = fixed_point_solve(expansive, Vector{0.0}, Vector{}, tight(0.5));
  ASSERT_TRUE(eq.converged);
  EXPECT_NEAR(eq.rho_hat, 1.5, 1e-6);
  EXPECT_EQ(code_of([&] { implicit_gradient(expansive, eq, Vector{}, Vector{1.0}); }),
            ErrorCode::kUnstableEquilibrium);
  const Vector fallback = implicit_gradient(expansive, eq, Vector{}, Vector{1.0},
                                            {.fallback_to_unroll = true, .fallback_depth = 2});
  EXPECT_NEAR(fallback[0], 1.0 - 1.5, 1e-12);

  const auto layer = AffineLayer::scalar(0.5, 1.0);
  auto unconverged = fixed_point_solve(layer, Vector{0.0}, Vector{}, {.tol = 1e-12, .max_iter = 2});
  EXPECT_EQ(code_of([&] { implicit_gradient(layer, unconverged, Vector{}, Vector{1.0}); }),
            ErrorCode::kNotConverged);
  auto bare = fixed_point_solve(layer, Vector{0.0}, Vector{},
                                {.tol = 1e-10, .linearize_at_solution = false});
  EXPECT_EQ(code_of([&] { implicit_gradient(layer, bare, Vector{}, Vector{1.0}); }),
            ErrorCode::kInvalidArgument);
}

TEST(ImplicitGradient, AdjointSolveRecomposes) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix j = random_contraction(rng, 6, 0.9);
    const Vector g = rng.normal_vector(6);
    const Vector u = solve_adjoint(j, g);
    Matrix ij = Matrix::identity(6);
    ij -= j;
    EXPECT_LE(rdfl::norm_inf(rdfl::transpose_times(ij, u) - g), 1e-10);
  }
  EXPECT_EQ(code_of([] { solve_adjoint(Matrix::identity(2), Vector{1, 1}); }),
            ErrorCode::kUnstableEquilibrium);
}

TEST(ImplicitGradient, IndependentOfRootFindLength) {
  Rng rng(30);
  const Matrix a = random_symmetric_with_radius(rng, 4, 0.7);
  const TanhLayer layer(a, rng.uniform_matrix(4, 3, -1, 1), Vector{0.2, 0.5, -0.4});
  const Vector lg = rng.normal_vector(4);
  const Vector x0 = rng.uniform_vector(4, -1, 1);
  const auto short_run = fixed_point_solve(layer, x0, Vector{}, {.tol = 1e-10, .max_iter = 50});
  const auto long_run = fixed_point_solve(layer, x0, Vector{}, {.tol = 1e-10, .max_iter = 500});
  ASSERT_TRUE(short_run.converged && long_run.converged);
  const Vector g1 = implicit_gradient(layer, short_run, Vector{}, lg);
  const Vector g2 = implicit_gradient(layer, long_run, Vector{}, lg);
  EXPECT_LE(rdfl::norm_inf(g1 - g2), 1e-8);
}

TEST(ImplicitGradient, MatchesFiniteDifferencesOnNonlinearDouble) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_contraction(rng, 4, 0.6);
    const Matrix b = rng.uniform_matrix(4, 3, -1, 1);
    const Vector theta = rng.uniform_vector(3, -1, 1);
    const Vector lg = rng.normal_vector(4);
    const TanhLayer layer(a, b, theta);
    const auto eq = fixed_point_solve(layer, Vector(4), Vector{}, tight());
    const Vector g = implicit_gradient(layer, eq, Vector{}, lg);
    const Vector fd = rdfl::numerics::finite_difference_gradient(
        [&](const Vector& t) {
          const TanhLayer l(a, b, t);
          return rdfl::dot(lg, fixed_point_solve(l, eq.x_star, Vector{}, tight()).x_star);
        },
        theta, 1e-5);
    EXPECT_LE(rdfl::harness::max_relative_error(g, fd, 1e-6), 1e-5);
  }
}

TEST(ProductionLayer, GradientsMatchFiniteDifferences) {
  using namespace rdfl::harness;
  const auto inst = make_newsvendor_check_instance(3);
  LayerFactory factory = [&](const Vector& theta) {
    auto p = inst.params;
    p.assign(theta);
    return make_owned_coupled_layer(std::move(p), inst.program);
  };
  for (auto scheme : {GradScheme::kUnroll, GradScheme::kImplicit}) {
    GradcheckOptions o;
    o.scheme = scheme;
    const auto r = check_gradient(factory, inst.params.flatten(), inst.x0, inst.v, inst.loss_grad, o);
    EXPECT_LE(r.max_rel_err, 1e-3);
  }
}

TEST(ProductionLayer, MaskedModeIgnoresDecisionInput) {
  const auto inst = rdfl::harness::make_newsvendor_check_instance(5);
  const CoupledLayer masked(inst.params, inst.program, InputMode::kMasked);
  const auto a = masked.linearize(inst.x0, inst.v);
  const auto b = masked.linearize(inst.x0 + Vector(inst.x0.size(), 7.0), inst.v);
  EXPECT_EQ(a.x_out, b.x_out);
  EXPECT_EQ(rdfl::max_abs(a.jacobian), 0.0);
  EXPECT_EQ(a.param_vjp(inst.loss_grad), b.param_vjp(inst.loss_grad));
}

TEST(Neumann, ScalarGeometricSum) {
  EXPECT_NEAR(neumann_truncated_inverse(Matrix{{0.5}}, 20)(0, 0), 2.0 - std::pow(0.5, 20), 1e-15);
  EXPECT_NEAR(neumann_truncated_inverse(Matrix{{0.5}}, 20)(0, 0), 1.999998, 2e-6);
  EXPECT_EQ(neumann_truncated_inverse(Matrix{{0.5}}, 0), Matrix::identity(1));
  EXPECT_EQ(neumann_truncated_inverse(Matrix(3, 3, 0.2), 0), Matrix::identity(3));
}

TEST(Neumann, MatchesDirectSolve) {
  Rng rng(60);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix j = random_symmetric_with_radius(rng, 5, 0.6);
    Matrix ij = Matrix::identity(5);
    ij -= j;
    const Matrix inv = rdfl::numerics::lu_solve(ij, Matrix::identity(5));
    EXPECT_LE(rdfl::max_abs(neumann_truncated_inverse(j, 40) - inv), 1e-6);
  }
}

TEST(Equivalence, ScalarWitnessGap) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const auto rep = gradient_equivalence_report(layer, Vector{0.0}, Vector{}, Vector{1.0}, {3});
  EXPECT_NEAR(rep.entries[0].abs_err, 0.25, 1e-12);
  EXPECT_NEAR(rep.entries[0].rel_err, 0.125, 1e-12);
  EXPECT_NEAR(rep.rho_hat, 0.5, 1e-6);
}

TEST(Equivalence, FittedRatioTracksRho) {
  Rng rng(70);
  for (double rho : {0.3, 0.5, 0.7, 0.8}) {
    const Matrix a = random_symmetric_with_radius(rng, 4, rho);
    const AffineLayer layer(a, rng.uniform_matrix(4, 2, -1, 1), Vector{1.0, -1.0});
    const auto rep = gradient_equivalence_report(layer, Vector(4), Vector{}, rng.normal_vector(4),
                                                 {5, 10, 15, 20, 25});
    EXPECT_NEAR(rep.fitted_ratio, rep.rho_hat, 0.1) << rho;
    for (std::size_t i = 1; i < rep.entries.size(); ++i) {
      EXPECT_LE(rep.entries[i].rel_err, rep.entries[i - 1].rel_err + 1e-15);
    }
  }
}

TEST(Equivalence, UnstableEquilibriumRejected) {
  const AffineLayer layer(Matrix{{-1.5}}, Matrix{{1.0}}, Vector{1.0});
  EXPECT_EQ(code_of([&] {
              gradient_equivalence_report(layer, Vector{0.0}, Vector{}, Vector{1.0}, {3});
            }),
            ErrorCode::kUnstableEquilibrium);
}

TEST(Equivalence, JsonShape) {
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  const auto j = to_json(gradient_equivalence_report(layer, Vector{0.0}, Vector{}, Vector{1.0}, {1, 2}));
  EXPECT_TRUE(j.contains("rho_hat"));
  EXPECT_TRUE(j.contains("fitted_ratio"));
  ASSERT_EQ(j["entries"].size(), 2u);
  EXPECT_EQ(j["entries"][1]["K"], 2);
  EXPECT_TRUE(j["entries"][1].contains("rel_err"));
}

TEST(Instrumentation, CountsDeepUnrollsAndFixedPoints) {
  reset_call_counts();
  const auto layer = AffineLayer::scalar(0.5, 1.0);
  unroll_forward(layer, Vector{0.0}, Vector{}, 1);
  EXPECT_EQ(call_counts().deep_unrolls, 0u);
  unroll_forward(layer, Vector{0.0}, Vector{}, 2);
  fixed_point_solve(layer, Vector{0.0}, Vector{});
  EXPECT_EQ(call_counts().deep_unrolls, 1u);
  EXPECT_EQ(call_counts().fixed_point_solves, 1u);
}

}  // namespace
