#include "rdfl/predictor/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/numerics/random.hpp"

namespace rdfl::predictor {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double leaky(double z, double slope) { return z > 0.0 ? z : slope * z; }
double leaky_grad(double z, double slope) { return z > 0.0 ? 1.0 : slope; }

Vector output_derivative(const MlpParams& p, const Vector& z) {
  Vector d(z.size(), p.output_scale);
  if (p.output == OutputTransform::kSoftplus)
    for (std::size_t i = 0; i < z.size(); ++i) d[i] = p.output_scale * sigmoid(z[i]);
  return d;
}

std::vector<std::size_t> dims_for(const MlpShape& shape) {
  if (shape.decision_dim == 0) fail(ErrorCode::kShapeMismatch, "MLP decision dim must be positive");
  std::vector<std::size_t> dims{shape.decision_dim + shape.feature_dim};
  dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
  dims.push_back(shape.decision_dim);
  return dims;
}

}  // namespace

std::size_t MlpParams::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    total += weights[l].rows() * weights[l].cols() + biases[l].size();
  return total;
}

Vector MlpParams::flatten() const {
  Vector flat(param_count());
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double w : weights[l].span()) flat[k++] = w;
    for (double b : biases[l]) flat[k++] = b;
  }
  return flat;
}

void MlpParams::assign(const Vector& flat) {
  if (flat.size() != param_count()) fail(ErrorCode::kShapeMismatch, "flat parameter size mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    double* w = weights[l].data();
    for (std::size_t i = 0; i < weights[l].rows() * weights[l].cols(); ++i) w[i] = flat[k++];
    for (double& b : biases[l]) b = flat[k++];
  }
}

void MlpParams::validate() const {
  if (layer_dims.size() < 2) fail(ErrorCode::kShapeMismatch, "MLP needs at least one layer");
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
    fail(ErrorCode::kShapeMismatch, "MLP layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1])
      fail(ErrorCode::kShapeMismatch, "MLP layer " + std::to_string(l) + " shape mismatch");
  }
  if (decision_dim == 0 || decision_dim > input_dim() || output_dim() != decision_dim)
    fail(ErrorCode::kShapeMismatch, "MLP input/output dims must be n + d → n");
  if (!input_scale.empty() && input_scale.size() != input_dim())
    fail(ErrorCode::kShapeMismatch, "MLP input_scale size mismatch");
}

MlpParams make_mlp(const MlpShape& shape, OutputTransform output) {
  MlpParams p;
  p.layer_dims = dims_for(shape);
  p.decision_dim = shape.decision_dim;
  p.output = output;
  for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
    p.weights.emplace_back(p.layer_dims[l + 1], p.layer_dims[l]);
    p.biases.emplace_back(p.layer_dims[l + 1]);
  }
  return p;
}

MlpParams init_kaiming_uniform(const MlpShape& shape, std::uint64_t seed,
                               OutputTransform output) {
  MlpParams p = make_mlp(shape, output);
  numerics::Rng rng(seed);
  const double gain = std::sqrt(2.0 / (1.0 + p.leaky_slope * p.leaky_slope));
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double fan_in = static_cast<double>(p.layer_dims[l]);
    const double w_bound = gain * std::sqrt(3.0 / fan_in);
    const double b_bound = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < p.weights[l].rows(); ++i)
      for (double& w : p.weights[l].row(i)) w = rng.uniform(-w_bound, w_bound);
    for (double& b : p.biases[l]) b = rng.uniform(-b_bound, b_bound);
  }
  return p;
}

PredictorGradients PredictorGradients::zeros_like(const MlpParams& params) {
  PredictorGradients g;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    g.weights.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    g.biases.emplace_back(params.biases[l].size());
  }
  return g;
}

Vector PredictorGradients::flatten() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    total += weights[l].rows() * weights[l].cols() + biases[l].size();
  Vector flat(total);
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double w : weights[l].span()) flat[k++] = w;
    for (double b : biases[l]) flat[k++] = b;
  }
  return flat;
}

PredictorGradients PredictorGradients::unflatten(const MlpParams& params, const Vector& flat) {
  PredictorGradients g = zeros_like(params);
  if (flat.size() != params.param_count())
    fail(ErrorCode::kShapeMismatch, "flat gradient size mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    double* w = g.weights[l].data();
    for (std::size_t i = 0; i < g.weights[l].rows() * g.weights[l].cols(); ++i) w[i] = flat[k++];
    for (double& b : g.biases[l]) b = flat[k++];
  }
  return g;
}

PredictorGradients& PredictorGradients::operator+=(const PredictorGradients& other) {
  if (other.weights.size() != weights.size())
    fail(ErrorCode::kShapeMismatch, "gradient layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

PredictorGradients& PredictorGradients::operator*=(double alpha) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= alpha;
    biases[l] *= alpha;
  }
  return *this;
}

ForwardResult predictor_forward(const MlpParams& params, const Vector& x, const Vector& v) {
  if (x.size() != params.decision_dim || x.size() + v.size() != params.input_dim())
    fail(ErrorCode::kShapeMismatch, "predictor_forward: input sizes do not match layer_dims[0]");
  ForwardResult result;
  MlpTape& tape = result.tape;
  Vector input = concat(x, v);
  if (!params.input_scale.empty()) input = hadamard(input, params.input_scale);
  tape.activations.push_back(std::move(input));

  const std::size_t layers = params.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    Vector z = params.weights[l] * tape.activations.back();
    z += params.biases[l];
    if (l + 1 < layers) {
      Vector a(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = leaky(z[i], params.leaky_slope);
      tape.activations.push_back(std::move(a));
    } else {
      Vector out(z.size());
      for (std::size_t i = 0; i < z.size(); ++i)
        out[i] = params.output_scale *
                 (params.output == OutputTransform::kSoftplus ? softplus(z[i]) : z[i]);
      tape.output = out;
    }
    tape.pre_activations.push_back(std::move(z));
  }
  result.c_hat = tape.output;
  return result;
}

Matrix predictor_input_jacobian(const MlpParams& params, const MlpTape& tape) {
  const std::size_t layers = params.layer_count();
  Matrix r = Matrix::diagonal(output_derivative(params, tape.pre_activations.back()));
  for (std::size_t l = layers; l-- > 0;) {
    r = r * params.weights[l];
    if (l > 0) {
      const Vector& z = tape.pre_activations[l - 1];
      for (std::size_t i = 0; i < r.rows(); ++i) {
        auto row = r.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] *= leaky_grad(z[j], params.leaky_slope);
      }
    }
  }
  const std::size_t n = params.decision_dim;
  Matrix jac(r.rows(), n);
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      jac(i, j) = r(i, j) * (params.input_scale.empty() ? 1.0 : params.input_scale[j]);
  return jac;
}

PredictorGradients predictor_param_vjp(const MlpParams& params, const MlpTape& tape,
                                       const Vector& upstream) {
  if (upstream.size() != params.output_dim())
    fail(ErrorCode::kShapeMismatch, "predictor_param_vjp: upstream size mismatch");
  PredictorGradients g = PredictorGradients::zeros_like(params);
  Vector delta = hadamard(upstream, output_derivative(params, tape.pre_activations.back()));
  for (std::size_t l = params.layer_count(); l-- > 0;) {
    const Vector& a = tape.activations[l];
    Matrix& gw = g.weights[l];
    for (std::size_t i = 0; i < gw.rows(); ++i) {
      const double di = delta[i];
      if (di == 0.0) continue;
      auto row = gw.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = di * a[j];
    }
    g.biases[l] = delta;
    if (l > 0) {
      Vector back = transpose_times(params.weights[l], delta);
      const Vector& z = tape.pre_activations[l - 1];
      for (std::size_t j = 0; j < back.size(); ++j) back[j] *= leaky_grad(z[j], params.leaky_slope);
      delta = std::move(back);
    }
  }
  return g;
}

double min_hidden_preactivation(const MlpParams& params, const MlpTape& tape) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < params.layer_count(); ++l)
    for (double z : tape.pre_activations[l]) best = std::min(best, std::abs(z));
  return best;
}

}  // namespace rdfl::predictor
