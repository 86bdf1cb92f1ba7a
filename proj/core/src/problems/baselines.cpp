#include "rdfl/problems/baselines.hpp"

#include "rdfl/optlayer/solver.hpp"
#include "rdfl/recursive/coupled_layer.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace rdfl::problems {

StepResult pto_baseline_step(const predictor::MlpParams& params, const Sample& sample,
                             const optlayer::ConvexProgram& program) {
  const auto fwd = predictor::predictor_forward(params, Vector(program.n(), 0.0), sample.v);
  const Vector diff = fwd.c_hat - sample.c_true;
  StepResult out;
  out.loss = dot(diff, diff);
  out.gradient = predictor::predictor_param_vjp(params, fwd.tape, 2.0 * diff).flatten();
  out.x_pred = optlayer::solve(program, fwd.c_hat).x;
  out.c_hat = fwd.c_hat;
  return out;
}

StepResult sdfl_baseline_step(const predictor::MlpParams& params, const Sample& sample,
                              const optlayer::ConvexProgram& program, LossMode loss_mode) {
  const recursive::CoupledLayer layer(params, program, recursive::InputMode::kMasked);
  const auto trace = recursive::unroll_forward(layer, Vector(program.n(), 0.0), sample.v, 1);
  StepResult out;
  out.x_pred = trace.x_seq.back();
  out.c_hat = trace.c_seq.back();
  const auto loss = decision_loss(loss_mode, program, out.x_pred, sample.c_true, sample.x_oracle);
  out.loss = loss.value;
  out.gradient = recursive::unroll_gradient(trace, loss.grad_x);
  return out;
}

Vector baseline_decision(const predictor::MlpParams& params, const Vector& v,
                         const optlayer::ConvexProgram& program) {
  const auto fwd = predictor::predictor_forward(params, Vector(program.n(), 0.0), v);
  return optlayer::solve(program, fwd.c_hat).x;
}

}  // namespace rdfl::problems
