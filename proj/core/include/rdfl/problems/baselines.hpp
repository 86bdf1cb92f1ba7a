#pragma once

#include "rdfl/optlayer/program.hpp"
#include "rdfl/predictor/mlp.hpp"
#include "rdfl/problems/dataset.hpp"
#include "rdfl/problems/losses.hpp"

namespace rdfl::problems {

struct StepResult {
  Vector gradient;  // flattened, predictor layout
  double loss = 0.0;
  Vector x_pred;    // decision the scheme would take for this sample
  Vector c_hat;
};

/// Feature-only prediction (decision slot zero), trained on ‖ĉ − c_true‖².
StepResult pto_baseline_step(const predictor::MlpParams& params, const Sample& sample,
                             const optlayer::ConvexProgram& program);

/// Feature-only prediction through one solve, trained with the decision loss.
StepResult sdfl_baseline_step(const predictor::MlpParams& params, const Sample& sample,
                              const optlayer::ConvexProgram& program, LossMode loss_mode);

/// Decision taken by either feature-only baseline: solve(program, F(0, v)).
Vector baseline_decision(const predictor::MlpParams& params, const Vector& v,
                         const optlayer::ConvexProgram& program);

}  // namespace rdfl::problems
