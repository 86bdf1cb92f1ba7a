#pragma once

#include "rdfl/optlayer/program.hpp"
#include "rdfl/optlayer/solver.hpp"

namespace rdfl::optlayer {

/// Maximum KKT residual a solution may carry into the sensitivity solve.
inline constexpr double kSensitivityKktTolerance = 1e-7;

/// Differentiated KKT system at a primal-dual point, (n + m) × (n + m):
///
///   [ 2ε·I        Gᵀ         ]
///   [ D(dual)·G   D(G·x − h) ]
///
/// Top rows come from stationarity, bottom rows from complementary slackness.
Matrix assemble_kkt_matrix(const ConvexProgram& program, const PrimalDualSolution& sol);

/// ∂x*/∂c (n × n): the first n rows of −M⁻¹·[I; 0].
/// Throws Error{kSingularKkt} when M is singular (degenerate active set).
Matrix kkt_sensitivity(const ConvexProgram& program, const PrimalDualSolution& sol);

}  // namespace rdfl::optlayer
