#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rdfl/numerics/matrix.hpp"

namespace rdfl::predictor {

enum class OutputTransform {
  kIdentity,
  /// ĉ = output_scale · softplus(z); keeps predicted costs strictly positive.
  kSoftplus,
};

struct MlpShape {
  std::size_t decision_dim = 0;  // n, the x-slice of the input
  std::size_t feature_dim = 0;   // d, the v-slice of the input
  std::vector<std::size_t> hidden{32};
};

/// Parameters θ of the predictor F_θ(x, v) → ĉ.
///
/// The network sees the concatenation [x; v] multiplied elementwise by the
/// fixed `input_scale`, runs leaky-rectifier hidden layers and an affine
/// output layer followed by `output`. `input_scale` and `output_scale` are
/// normalization constants, not trained.
struct MlpParams {
  std::vector<std::size_t> layer_dims;  // [n + d, hidden..., n]
  std::vector<Matrix> weights;          // weights[l] is dims[l+1] × dims[l]
  std::vector<Vector> biases;
  double leaky_slope = 0.01;
  OutputTransform output = OutputTransform::kIdentity;
  double output_scale = 1.0;
  Vector input_scale;  // length n + d; empty means all ones
  std::size_t decision_dim = 0;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t feature_dim() const { return input_dim() - decision_dim; }
  std::size_t layer_count() const { return weights.size(); }
  std::size_t param_count() const;

  /// Flattened θ: for each layer, W row-major then b.
  Vector flatten() const;
  void assign(const Vector& flat);

  /// Throws ShapeMismatch when layer dims, weights and biases disagree.
  void validate() const;
};

/// Zero-initialized parameters of the given shape.
MlpParams make_mlp(const MlpShape& shape, OutputTransform output = OutputTransform::kIdentity);

/// Kaiming-uniform weights (leaky-rectifier gain) and fan-in uniform biases,
/// from an explicit seed.
MlpParams init_kaiming_uniform(const MlpShape& shape, std::uint64_t seed,
                               OutputTransform output = OutputTransform::kIdentity);

/// Gradients with the same layout as MlpParams.
struct PredictorGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static PredictorGradients zeros_like(const MlpParams& params);
  Vector flatten() const;
  static PredictorGradients unflatten(const MlpParams& params, const Vector& flat);
  PredictorGradients& operator+=(const PredictorGradients& other);
  PredictorGradients& operator*=(double alpha);
};

/// Forward record needed by the backward pass.
struct MlpTape {
  std::vector<Vector> activations;      // activations[0] is the scaled input
  std::vector<Vector> pre_activations;  // one per layer
  Vector output;                        // ĉ
};

struct ForwardResult {
  Vector c_hat;
  MlpTape tape;
};

ForwardResult predictor_forward(const MlpParams& params, const Vector& x, const Vector& v);

/// ∂ĉ/∂x, the first n columns of the input Jacobian (n × n).
Matrix predictor_input_jacobian(const MlpParams& params, const MlpTape& tape);

/// Gradients of upstreamᵀ·ĉ with respect to every weight and bias.
PredictorGradients predictor_param_vjp(const MlpParams& params, const MlpTape& tape,
                                       const Vector& upstream);

/// Smallest |pre-activation| over the hidden layers. Finite-difference checks
/// resample inputs that sit too close to a leaky-rectifier kink.
double min_hidden_preactivation(const MlpParams& params, const MlpTape& tape);

}  // namespace rdfl::predictor
