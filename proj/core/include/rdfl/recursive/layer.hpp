#pragma once

#include <cstddef>
#include <functional>

#include "rdfl/numerics/matrix.hpp"

namespace rdfl::recursive {

/// Upstream adjoint (length n) ↦ flattened parameter gradient.
using ParamVjp = std::function<Vector(const Vector&)>;

struct StepOutput {
  Vector x;  // Φ(x_in, v)
  Vector c;  // prediction fed to the solve
};

/// Forward value plus the two local derivatives at one input.
struct Linearization {
  Vector x_out;
  Vector c;
  Matrix jacobian;  // ∂Φ/∂x_in, n × n
  ParamVjp param_vjp;
};

/// One pass of the loop x ↦ Φ(x, v). Implementations must be deterministic
/// and must not change between forward and backward of a sample; apply() and
/// linearize() have to agree bitwise on the forward value.
class RecursiveLayer {
 public:
  virtual ~RecursiveLayer() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t param_count() const = 0;

  virtual StepOutput apply(const Vector& x, const Vector& v) const = 0;
  virtual Linearization linearize(const Vector& x, const Vector& v) const = 0;
};

}  // namespace rdfl::recursive
