#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rdfl/numerics/matrix.hpp"

namespace rdfl::optlayer {

enum class ProblemTag { kNewsvendor, kMatching, kGeneric };

std::string_view to_string(ProblemTag tag) noexcept;

/// min cᵀx + reg_eps‖x‖²  s.t. 1ᵀx ≥ T1, 1ᵀx ≤ T2, s1 ≤ x ≤ s2.
struct NewsvendorSpec {
  std::size_t n = 0;
  double T1 = 0.0;
  double T2 = 0.0;
  Vector s1;
  Vector s2;
  double reg_eps = 1e-2;
};

/// Relaxed bipartite matching over z = vec(x) (row-major, z[i·players + j] = x_ij):
/// min qᵀz + reg_eps‖z‖²  s.t. column sums ≤ 1, row sums ≤ 1, 1ᵀz ≥ S, 0 ≤ z ≤ 1.
struct MatchingSpec {
  std::size_t players = 0;
  double S = 0.0;
  double reg_eps = 1e-2;
};

using ProgramSpec = std::variant<NewsvendorSpec, MatchingSpec>;

/// One nonzero of a constraint row.
struct RowEntry {
  std::uint32_t col;
  double value;
};

/// Convex quadratic program with the parameter in the objective only:
///
///   min_x  cᵀx + reg_eps‖x‖²   s.t.  G·x ≤ h.
///
/// G is kept dense (it is also a block of the KKT sensitivity matrix) with a
/// cached sparse row view for the interior-point normal equations.
class ConvexProgram {
 public:
  /// Generic program. Runs a phase-one feasibility solve and throws
  /// Error{kInfeasibleSpec} when {G·x ≤ h} is empty or not bounded along
  /// every coordinate.
  static ConvexProgram generic(Matrix ineq_g, Vector ineq_h, double reg_eps);

  std::size_t n() const noexcept { return ineq_g_.cols(); }
  std::size_t constraint_count() const noexcept { return ineq_g_.rows(); }
  /// Size of the KKT sensitivity matrix: n primal rows plus one per inequality.
  std::size_t kkt_dimension() const noexcept { return n() + constraint_count(); }

  double reg_eps() const noexcept { return reg_eps_; }
  const Matrix& ineq_g() const noexcept { return ineq_g_; }
  const Vector& ineq_h() const noexcept { return ineq_h_; }
  ProblemTag tag() const noexcept { return tag_; }
  const std::optional<ProgramSpec>& spec() const noexcept { return spec_; }
  const std::vector<std::vector<RowEntry>>& sparse_rows() const noexcept { return rows_; }

  /// Deterministic interior point of the feasible set, used as x₀.
  const Vector& initial_point() const noexcept { return initial_point_; }
  /// Per-coordinate box, when the program has one.
  const std::optional<std::pair<Vector, Vector>>& box() const noexcept { return box_; }

  double objective(const Vector& c, const Vector& x) const;
  /// G·x and Gᵀ·y through the sparse row view.
  Vector apply_g(const Vector& x) const;
  Vector apply_gt(const Vector& y) const;

 private:
  friend ConvexProgram build_newsvendor_program(std::size_t, double, double, const Vector&,
                                                const Vector&, double);
  friend ConvexProgram build_matching_program(std::size_t, double, double);

  ConvexProgram(Matrix ineq_g, Vector ineq_h, double reg_eps, ProblemTag tag);

  Matrix ineq_g_;
  Vector ineq_h_;
  double reg_eps_ = 0.0;
  ProblemTag tag_ = ProblemTag::kGeneric;
  std::optional<ProgramSpec> spec_;
  std::vector<std::vector<RowEntry>> rows_;
  Vector initial_point_;
  std::optional<std::pair<Vector, Vector>> box_;
};

/// Rows, in order: 1ᵀx ≥ T1, 1ᵀx ≤ T2, x ≥ s1 (n rows), x ≤ s2 (n rows).
/// Throws Error{kInfeasibleSpec} if the bounds contradict.
ConvexProgram build_newsvendor_program(std::size_t n, double T1, double T2, const Vector& s1,
                                       const Vector& s2, double reg_eps);

/// Rows, in order: column sums (players), row sums (players), 1ᵀz ≥ S,
/// z ≥ 0 (players²), z ≤ 1 (players²).
ConvexProgram build_matching_program(std::size_t players, double S, double reg_eps);

ConvexProgram build_program(const ProgramSpec& spec);

}  // namespace rdfl::optlayer
