#include "rdfl/optlayer/sensitivity.hpp"

#include <string>

#include "rdfl/numerics/linalg.hpp"

namespace rdfl::optlayer {

Matrix assemble_kkt_matrix(const ConvexProgram& program, const PrimalDualSolution& sol) {
  const std::size_t n = program.n();
  const std::size_t m = program.constraint_count();
  require(sol.x.size() == n && sol.duals.size() == m, ErrorCode::kShapeMismatch,
          "assemble_kkt_matrix: solution does not match program");
  const Matrix& g = program.ineq_g();
  const Vector slack = program.apply_g(sol.x) - program.ineq_h();
  Matrix k(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 2.0 * program.reg_eps();
    for (std::size_t r = 0; r < m; ++r) k(i, n + r) = g(r, i);
  }
  for (std::size_t r = 0; r < m; ++r) {
    for (const auto& e : program.sparse_rows()[r]) k(n + r, e.col) = sol.duals[r] * e.value;
    k(n + r, n + r) = slack[r];
  }
  return k;
}

Matrix kkt_sensitivity(const ConvexProgram& program, const PrimalDualSolution& sol) {
  if (!(sol.kkt_residual <= kSensitivityKktTolerance)) {
    fail(ErrorCode::kInvalidArgument,
         "kkt_sensitivity: solution KKT residual " + std::to_string(sol.kkt_residual) +
             " exceeds tolerance");
  }
  const std::size_t n = program.n();
  const std::size_t dim = program.kkt_dimension();
  Matrix rhs(dim, n);
  for (std::size_t i = 0; i < n; ++i) rhs(i, i) = -1.0;
  Matrix full;
  try {
    full = numerics::lu_solve(assemble_kkt_matrix(program, sol), rhs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularMatrix) throw;
    fail(ErrorCode::kSingularKkt, std::string("kkt_sensitivity: ") + e.what());
  }
  return full.top_rows(n);
}

}  // namespace rdfl::optlayer
