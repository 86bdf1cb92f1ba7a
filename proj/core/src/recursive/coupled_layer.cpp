#include "rdfl/recursive/coupled_layer.hpp"

#include <memory>

#include "rdfl/error.hpp"
#include "rdfl/optlayer/sensitivity.hpp"

namespace rdfl::recursive {

CoupledLayer::CoupledLayer(const predictor::MlpParams& params,
                           const optlayer::ConvexProgram& program, InputMode mode,
                           optlayer::SolverOptions solver)
    : params_(&params), program_(&program), mode_(mode), solver_(solver) {
  require(params.decision_dim == program.n() && params.output_dim() == program.n(),
          ErrorCode::kShapeMismatch, "CoupledLayer: predictor and program dimensions differ");
}

Vector CoupledLayer::predictor_input(const Vector& x) const {
  if (mode_ == InputMode::kMasked) return Vector(x.size(), 0.0);
  return x;
}

StepOutput CoupledLayer::apply(const Vector& x, const Vector& v) const {
  const auto fwd = predictor::predictor_forward(*params_, predictor_input(x), v);
  auto sol = optlayer::solve(*program_, fwd.c_hat, solver_);
  return {std::move(sol.x), fwd.c_hat};
}

Linearization CoupledLayer::linearize(const Vector& x, const Vector& v) const {
  auto fwd = predictor::predictor_forward(*params_, predictor_input(x), v);
  auto sol = optlayer::solve(*program_, fwd.c_hat, solver_);
  const Matrix dx_dc = optlayer::kkt_sensitivity(*program_, sol);

  Linearization out;
  out.x_out = std::move(sol.x);
  out.c = fwd.c_hat;
  if (mode_ == InputMode::kMasked) {
    out.jacobian = Matrix(program_->n(), program_->n());
  } else {
    out.jacobian = dx_dc * predictor::predictor_input_jacobian(*params_, fwd.tape);
  }
  auto tape = std::make_shared<const predictor::MlpTape>(std::move(fwd.tape));
  const predictor::MlpParams* params = params_;
  out.param_vjp = [params, tape, dx_dc](const Vector& upstream) {
    return predictor::predictor_param_vjp(*params, *tape, transpose_times(dx_dc, upstream)).flatten();
  };
  return out;
}

namespace {

class OwnedCoupledLayer final : public RecursiveLayer {
 public:
  OwnedCoupledLayer(predictor::MlpParams params, const optlayer::ConvexProgram& program,
                    InputMode mode)
      : params_(std::move(params)), inner_(params_, program, mode) {}
  OwnedCoupledLayer(const OwnedCoupledLayer&) = delete;
  OwnedCoupledLayer& operator=(const OwnedCoupledLayer&) = delete;

  std::size_t dim() const override { return inner_.dim(); }
  std::size_t param_count() const override { return inner_.param_count(); }
  StepOutput apply(const Vector& x, const Vector& v) const override { return inner_.apply(x, v); }
  Linearization linearize(const Vector& x, const Vector& v) const override {
    return inner_.linearize(x, v);
  }

 private:
  predictor::MlpParams params_;
  CoupledLayer inner_;
};

}  // namespace

std::unique_ptr<RecursiveLayer> make_owned_coupled_layer(predictor::MlpParams params,
                                                         const optlayer::ConvexProgram& program,
                                                         InputMode mode) {
  return std::make_unique<OwnedCoupledLayer>(std::move(params), program, mode);
}

}  // namespace rdfl::recursive
