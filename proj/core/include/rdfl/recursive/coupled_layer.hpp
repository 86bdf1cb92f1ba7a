#pragma once

#include <memory>

#include "rdfl/optlayer/program.hpp"
#include "rdfl/optlayer/solver.hpp"
#include "rdfl/predictor/mlp.hpp"
#include "rdfl/recursive/layer.hpp"

namespace rdfl::recursive {

enum class InputMode {
  kCoupled,  // F sees the previous decision
  kMasked,   // decision slot wired to zero (feature-only baselines)
};

/// Φ(x, v) = solve(program, F_θ(x, v)); J_Φ = (∂x*/∂c)·(∂ĉ/∂x).
/// Holds references: params and program must outlive the layer and stay
/// unchanged while it is in use.
class CoupledLayer final : public RecursiveLayer {
 public:
  CoupledLayer(const predictor::MlpParams& params, const optlayer::ConvexProgram& program,
               InputMode mode = InputMode::kCoupled, optlayer::SolverOptions solver = {});

  std::size_t dim() const override { return program_->n(); }
  std::size_t param_count() const override { return params_->param_count(); }
  InputMode mode() const noexcept { return mode_; }

  StepOutput apply(const Vector& x, const Vector& v) const override;
  Linearization linearize(const Vector& x, const Vector& v) const override;

 private:
  Vector predictor_input(const Vector& x) const;

  const predictor::MlpParams* params_;
  const optlayer::ConvexProgram* program_;
  InputMode mode_;
  optlayer::SolverOptions solver_;
};

/// Coupled layer that owns its predictor parameters.
std::unique_ptr<RecursiveLayer> make_owned_coupled_layer(predictor::MlpParams params,
                                                         const optlayer::ConvexProgram& program,
                                                         InputMode mode = InputMode::kCoupled);

}  // namespace rdfl::recursive
