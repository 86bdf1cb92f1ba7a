#include "rdfl/recursive/equivalence.hpp"

#include <cmath>

#include "rdfl/error.hpp"

namespace rdfl::recursive {

Matrix neumann_truncated_inverse(const Matrix& j, std::size_t K) {
  require(j.is_square(), ErrorCode::kShapeMismatch, "neumann_truncated_inverse: J not square");
  Matrix sum = Matrix::identity(j.rows());
  Matrix power = sum;
  for (std::size_t i = 1; i <= K; ++i) {
    power = power * j;
    sum += power;
  }
  return sum;
}

double fit_decay_ratio(const std::vector<EquivalenceEntry>& entries) {
  double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
  double count = 0.0;
  for (const auto& e : entries) {
    if (!(e.rel_err > 1e-13) || !std::isfinite(e.rel_err)) continue;
    const double k = static_cast<double>(e.K);
    const double y = std::log(e.rel_err);
    sk += k;
    sy += y;
    skk += k * k;
    sky += k * y;
    count += 1.0;
  }
  if (count < 2.0) return 0.0;
  const double denom = count * skk - sk * sk;
  if (denom == 0.0) return 0.0;
  return std::exp((count * sky - sk * sy) / denom);
}

EquivalenceReport gradient_equivalence_report(const RecursiveLayer& layer, const Vector& x0,
                                              const Vector& v, const Vector& loss_grad,
                                              const std::vector<std::size_t>& K_list,
                                              const FixedPointOptions& options) {
  FixedPointOptions fp = options;
  fp.linearize_at_solution = true;
  const EquilibriumResult eq = fixed_point_solve(layer, x0, v, fp);
  const Vector g_implicit = implicit_gradient(layer, eq, v, loss_grad);
  const double denom = norm2(g_implicit);

  EquivalenceReport report;
  report.rho_hat = eq.rho_hat;
  report.implicit_norm = denom;
  for (std::size_t K : K_list) {
    require(K >= 1, ErrorCode::kInvalidArgument, "gradient_equivalence_report: K must be >= 1");
    const Vector g = unroll_gradient(unroll_forward(layer, x0, v, K), loss_grad);
    const double abs_err = norm2(g - g_implicit);
    report.entries.push_back({K, denom > 0.0 ? abs_err / denom : abs_err, abs_err});
  }
  report.fitted_ratio = fit_decay_ratio(report.entries);
  return report;
}

nlohmann::json to_json(const EquivalenceReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"K", e.K}, {"rel_err", e.rel_err}, {"abs_err", e.abs_err}});
  }
  return {{"rho_hat", report.rho_hat}, {"entries", entries}, {"fitted_ratio", report.fitted_ratio}};
}

}  // namespace rdfl::recursive
