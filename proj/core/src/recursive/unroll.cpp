#include "rdfl/recursive/unroll.hpp"

#include <string>

#include "instrumentation_internal.hpp"
#include "rdfl/error.hpp"

namespace rdfl::recursive {

UnrollTrace unroll_forward(const RecursiveLayer& layer, const Vector& x0, const Vector& v,
                           std::size_t K) {
  require(x0.size() == layer.dim(), ErrorCode::kShapeMismatch, "unroll_forward: len(x0) != n");
  if (K > 1) detail::count_deep_unroll();
  UnrollTrace trace;
  trace.x_seq.reserve(K + 1);
  trace.x_seq.push_back(x0);
  for (std::size_t i = 1; i <= K; ++i) {
    Linearization step;
    try {
      step = layer.linearize(trace.x_seq.back(), v);
    } catch (const Error& e) {
      throw Error(e.code(), "unroll step " + std::to_string(i) + ": " + e.what());
    }
    trace.residuals.push_back(norm_inf(step.x_out - trace.x_seq.back()));
    trace.x_seq.push_back(step.x_out);
    trace.c_seq.push_back(step.c);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

Vector unroll_gradient(const UnrollTrace& trace, const Vector& loss_grad) {
  require(!trace.steps.empty(), ErrorCode::kInvalidArgument, "unroll_gradient: empty trace");
  require(loss_grad.size() == trace.x_seq.back().size(), ErrorCode::kShapeMismatch,
          "unroll_gradient: len(loss_grad) != n");
  Vector adjoint = loss_grad;
  Vector grad;
  for (std::size_t i = trace.steps.size(); i-- > 0;) {
    const Linearization& step = trace.steps[i];
    Vector contribution = step.param_vjp(adjoint);
    if (grad.empty()) {
      grad = std::move(contribution);
    } else {
      grad += contribution;
    }
    if (i > 0) adjoint = transpose_times(step.jacobian, adjoint);
  }
  return grad;
}

}  // namespace rdfl::recursive
