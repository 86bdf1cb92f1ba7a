#include "rdfl/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdfl/error.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/optlayer/solver.hpp"
#include "rdfl/recursive/coupled_layer.hpp"
#include "rdfl/recursive/fixed_point.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace rdfl::harness {

double max_relative_error(const Vector& a, const Vector& b, double relative_floor) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch, "max_relative_error: size mismatch");
  const double floor = std::max(relative_floor * norm_inf(b), 1e-300);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  }
  return worst;
}

GradcheckResult check_gradient(const LayerFactory& factory, const Vector& theta, const Vector& x0,
                               const Vector& v, const Vector& loss_grad,
                               const GradcheckOptions& options) {
  GradcheckResult out;
  const auto base = factory(theta);
  Vector x_ref;
  if (options.scheme == GradScheme::kUnroll) {
    out.analytic = recursive::unroll_gradient(recursive::unroll_forward(*base, x0, v, options.K),
                                              loss_grad);
  } else {
    recursive::FixedPointOptions fp;
    fp.tol = options.implicit_tol;
    fp.max_iter = 100000;
    const auto eq = recursive::fixed_point_solve(*base, x0, v, fp);
    out.rho_hat = eq.rho_hat;
    out.analytic = recursive::implicit_gradient(*base, eq, v, loss_grad);
    x_ref = eq.x_star;
  }

  auto loss = [&](const Vector& t) {
    const auto layer = factory(t);
    if (options.scheme == GradScheme::kUnroll) {
      Vector x = x0;
      for (std::size_t i = 0; i < options.K; ++i) x = layer->apply(x, v).x;
      return dot(loss_grad, x);
    }
    recursive::FixedPointOptions fp;
    fp.tol = options.fd_tol * (1.0 + norm_inf(x_ref));
    fp.max_iter = 10000;
    fp.damping = 1.0;
    fp.linearize_at_solution = false;
    const auto eq = recursive::fixed_point_solve(*layer, x_ref, v, fp);
    recursive::require_converged(eq);
    // Keep iterating until the residual stops shrinking: the tolerance above
    // is relative, and its leftover error would dominate the difference
    // quotient.
    Vector x = eq.x_star;
    double best = eq.residual;
    for (std::size_t it = 0, stalls = 0; it < 1000 && stalls < 5; ++it) {
      Vector next = layer->apply(x, v).x;
      const double r = norm_inf(next - x);
      if (r < 0.999 * best) {
        best = r;
        stalls = 0;
      } else {
        ++stalls;
      }
      x = std::move(next);
    }
    return dot(loss_grad, x);
  };

  out.numeric = Vector(theta.size());
  Vector t = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    t[i] = theta[i] + options.fd_step;
    const double up = loss(t);
    t[i] = theta[i] - options.fd_step;
    const double down = loss(t);
    t[i] = theta[i];
    out.numeric[i] = (up - down) / (2.0 * options.fd_step);
  }
  out.max_rel_err = max_relative_error(out.analytic, out.numeric, options.relative_floor);
  return out;
}

namespace {

double loop_rho(const CheckInstance& inst) {
  recursive::CoupledLayer layer(inst.params, inst.program);
  recursive::FixedPointOptions fp;
  fp.tol = 1e-10;
  fp.max_iter = 5000;
  try {
    const auto eq = recursive::fixed_point_solve(layer, inst.x0, inst.v, fp);
    return eq.converged ? eq.rho_hat : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

CheckInstance make_newsvendor_check_instance(std::uint64_t seed,
                                             const CheckInstanceOptions& options) {
  const std::size_t n = options.n;
  const std::size_t d = options.d;
  const double upper = 100.0;
  CheckInstance inst{
      // Totals are kept off multiples of the box width so that no vertex has
      // more than n active rows.
      optlayer::build_newsvendor_program(n, 0.27 * upper * static_cast<double>(n),
                                         0.73 * upper * static_cast<double>(n), Vector(n, 0.0),
                                         Vector(n, upper), options.reg_eps),
      predictor::init_kaiming_uniform({n, d, {options.hidden}}, seed),
      Vector(),
      Vector(),
      Vector(),
      0.0};
  auto rng = numerics::Rng::stream(seed, 1);
  inst.params.input_scale = Vector(n + d, 1.0);
  for (std::size_t i = 0; i < n; ++i) inst.params.input_scale[i] = 1.0 / upper;
  // Output bias puts the unconstrained optimum −ĉ/(2ε) near the middle of the box.
  const double mid_price = -options.reg_eps * upper;
  for (double& b : inst.params.biases.back()) b = mid_price * rng.uniform(0.6, 1.4);
  inst.v = rng.uniform_vector(d, 0.0, 1.0);
  inst.x0 = inst.program.initial_point();
  inst.loss_grad = rng.normal_vector(n);

  // ρ is not linear in the scale once active sets move, so take damped
  // multiplicative steps and keep the final measurement.
  inst.rho_hat = loop_rho(inst);
  double total_scale = 1.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    if (std::abs(inst.rho_hat - options.rho_target) <= options.rho_tolerance) break;
    double factor =
        std::isfinite(inst.rho_hat) && inst.rho_hat > 0.0
            ? std::clamp(std::pow(options.rho_target / inst.rho_hat, 0.7), 0.5, 2.0)
            : 0.5;
    factor = std::clamp(total_scale * factor, 1.0 / 64.0, 16.0) / total_scale;
    if (factor == 1.0) break;
    total_scale *= factor;
    Matrix& w = inst.params.weights.front();
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = 0; c < n; ++c) w(r, c) *= factor;
    inst.rho_hat = loop_rho(inst);
  }
  return inst;
}

bool smooth_at_points(const CheckInstance& inst, const std::vector<Vector>& xs,
                      double min_preactivation, double slack_gap, double dual_gap) {
  for (const Vector& x : xs) {
    const auto fwd = predictor::predictor_forward(inst.params, x, inst.v);
    if (predictor::min_hidden_preactivation(inst.params, fwd.tape) < min_preactivation) return false;
    const auto sol = optlayer::solve(inst.program, fwd.c_hat);
    const Vector slack = inst.program.ineq_h() - inst.program.apply_g(sol.x);
    for (std::size_t r = 0; r < slack.size(); ++r) {
      if (slack[r] < slack_gap && sol.duals[r] < dual_gap) return false;
    }
  }
  return true;
}

}  // namespace rdfl::harness
