#pragma once

#include <cmath>

#include "rdfl/numerics/matrix.hpp"
#include "rdfl/recursive/layer.hpp"

namespace rdfl::testing {

/// Φ(x) = A·x + B·θ + b, with θ the parameter vector.
class AffineLayer final : public recursive::RecursiveLayer {
 public:
  AffineLayer(Matrix a, Matrix b, Vector theta, Vector offset = {})
      : a_(std::move(a)), b_(std::move(b)), theta_(std::move(theta)), offset_(std::move(offset)) {
    if (offset_.empty()) offset_ = Vector(a_.rows());
  }

  static AffineLayer scalar(double a, double theta) {
    return AffineLayer(Matrix{{a}}, Matrix{{1.0}}, Vector{theta});
  }

  std::size_t dim() const override { return a_.rows(); }
  std::size_t param_count() const override { return theta_.size(); }

  recursive::StepOutput apply(const Vector& x, const Vector&) const override {
    Vector y = a_ * x;
    y += b_ * theta_;
    y += offset_;
    return {y, y};
  }

  recursive::Linearization linearize(const Vector& x, const Vector& v) const override {
    auto step = apply(x, v);
    const Matrix b = b_;
    return {step.x, step.c, a_, [b](const Vector& u) { return transpose_times(b, u); }};
  }

 private:
  Matrix a_;
  Matrix b_;
  Vector theta_;
  Vector offset_;
};

/// Φ(x) = tanh(A·x + B·θ): a smooth nonlinear double.
class TanhLayer final : public recursive::RecursiveLayer {
 public:
  TanhLayer(Matrix a, Matrix b, Vector theta)
      : a_(std::move(a)), b_(std::move(b)), theta_(std::move(theta)) {}

  std::size_t dim() const override { return a_.rows(); }
  std::size_t param_count() const override { return theta_.size(); }

  recursive::StepOutput apply(const Vector& x, const Vector&) const override {
    Vector z = a_ * x;
    z += b_ * theta_;
    for (double& zi : z) zi = std::tanh(zi);
    return {z, z};
  }

  recursive::Linearization linearize(const Vector& x, const Vector& v) const override {
    auto step = apply(x, v);
    Vector d(step.x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 - step.x[i] * step.x[i];
    Matrix j = a_;
    for (std::size_t i = 0; i < j.rows(); ++i)
      for (std::size_t k = 0; k < j.cols(); ++k) j(i, k) *= d[i];
    const Matrix b = b_;
    return {step.x, step.c, j, [b, d](const Vector& u) { return transpose_times(b, hadamard(d, u)); }};
  }

 private:
  Matrix a_;
  Matrix b_;
  Vector theta_;
};

}  // namespace rdfl::testing
