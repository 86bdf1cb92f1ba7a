#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rdfl/error.hpp"
#include "rdfl/numerics/linalg.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/predictor/adam.hpp"
#include "rdfl/predictor/checkpoint.hpp"
#include "rdfl/predictor/mlp.hpp"

namespace {

using rdfl::Matrix;
using rdfl::Vector;
using rdfl::numerics::Rng;
using namespace rdfl::predictor;

// Straight-line re-evaluation of a network, written independently of the
// library's forward pass.
Vector reevaluate(const MlpParams& p, const Vector& x, const Vector& v) {
  std::vector<double> a;
  for (double xi : x) a.push_back(xi);
  for (double vi : v) a.push_back(vi);
  for (std::size_t i = 0; i < a.size() && !p.input_scale.empty(); ++i) a[i] *= p.input_scale[i];
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Matrix& w = p.weights[l];
    std::vector<double> z(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double acc = p.biases[l][r];
      for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * a[c];
      z[r] = acc;
    }
    const bool last = l + 1 == p.weights.size();
    for (double& zi : z) {
      if (!last) {
        zi = zi > 0 ? zi : p.leaky_slope * zi;
      } else if (p.output == OutputTransform::kSoftplus) {
        zi = p.output_scale * std::log1p(std::exp(zi));
      } else {
        zi = p.output_scale * zi;
      }
    }
    a = z;
  }
  return Vector(a);
}

MlpParams random_net(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t hidden,
                     OutputTransform out = OutputTransform::kIdentity) {
  MlpParams p = init_kaiming_uniform({n, d, {hidden}}, seed, out);
  Rng rng(seed + 1);
  for (auto& b : p.biases)
    for (double& bi : b) bi = rng.uniform(-0.5, 0.5);
  return p;
}

double rel_err(const Vector& a, const Vector& b) {
  double worst = 0.0;
  const double floor = 1e-6 * std::max(1.0, rdfl::norm_inf(b));
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  return worst;
}

TEST(PredictorForward, ZeroWeightsReturnOutputBias) {
  MlpParams p = make_mlp({3, 2, {4}});
  p.biases.back() = Vector{1.5, -2.0, 0.25};
  const auto out = predictor_forward(p, Vector{9, 8, 7}, Vector{1, 2});
  EXPECT_EQ(out.c_hat, (Vector{1.5, -2.0, 0.25}));
}

TEST(PredictorForward, IdentitySliceLinearLayer) {
  MlpParams p = make_mlp({3, 2, {}});
  for (std::size_t i = 0; i < 3; ++i) p.weights[0](i, i) = 1.0;
  const Vector x{0.3, -1.2, 4.0};
  EXPECT_EQ(predictor_forward(p, x, Vector{5, 6}).c_hat, x);
}

TEST(PredictorForward, MatchesIndependentReevaluation) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (auto out : {OutputTransform::kIdentity, OutputTransform::kSoftplus}) {
      MlpParams p = random_net(seed, 4, 3, 8, out);
      p.output_scale = 1.7;
      p.input_scale = Vector{0.1, 0.2, 0.3, 0.4, 1, 1, 2};
      Rng rng(seed * 31);
      const Vector x = rng.uniform_vector(4, -2, 2);
      const Vector v = rng.uniform_vector(3, 0, 1);
      const Vector got = predictor_forward(p, x, v).c_hat;
      const Vector want = reevaluate(p, x, v);
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
  }
}

TEST(PredictorForward, ShapeMismatch) {
  const MlpParams p = make_mlp({3, 2, {4}});
  try {
    predictor_forward(p, Vector{1, 2}, Vector{1, 2});
    FAIL();
  } catch (const rdfl::Error& e) {
    EXPECT_EQ(e.code(), rdfl::ErrorCode::kShapeMismatch);
  }
}

TEST(PredictorForward, Deterministic) {
  const MlpParams p = random_net(4, 3, 2, 16);
  const Vector x{1, 2, 3}, v{0.5, 0.1};
  EXPECT_EQ(predictor_forward(p, x, v).c_hat, predictor_forward(p, x, v).c_hat);
}

TEST(PredictorInputJacobian, LinearModelReturnsXBlock) {
  MlpParams p = make_mlp({2, 2, {}});
  p.weights[0] = Matrix{{1, 2, 3, 4}, {5, 6, 7, 8}};
  const auto fwd = predictor_forward(p, Vector{1, 1}, Vector{1, 1});
  EXPECT_EQ(predictor_input_jacobian(p, fwd.tape), (Matrix{{1, 2}, {5, 6}}));
}

TEST(PredictorInputJacobian, ZeroNetIsZero) {
  const MlpParams p = make_mlp({3, 2, {5}});
  const auto fwd = predictor_forward(p, Vector{1, 2, 3}, Vector{1, 1});
  EXPECT_EQ(predictor_input_jacobian(p, fwd.tape), Matrix(3, 3));
}

TEST(PredictorParamVjp, ZeroUpstreamGivesZeroGradients) {
  const MlpParams p = random_net(3, 3, 2, 6);
  const auto fwd = predictor_forward(p, Vector{1, 2, 3}, Vector{1, 1});
  const auto g = predictor_param_vjp(p, fwd.tape, Vector(3));
  for (double gi : g.flatten()) EXPECT_EQ(gi, 0.0);
}

TEST(PredictorParamVjp, LinearLayerFirstRow) {
  MlpParams p = make_mlp({2, 1, {}});
  p.weights[0] = Matrix{{1, 2, 3}, {4, 5, 6}};
  const auto fwd = predictor_forward(p, Vector{0.5, -1}, Vector{2});
  const auto g = predictor_param_vjp(p, fwd.tape, Vector{1, 0});
  EXPECT_EQ(g.weights[0], (Matrix{{0.5, -1, 2}, {0, 0, 0}}));
  EXPECT_EQ(g.biases[0], (Vector{1, 0}));
}

// At least 50 random draws, kink-excluded, against central differences.
TEST(PredictorGradients, MatchFiniteDifferencesOnRandomDraws) {
  int checked = 0;
  for (std::uint64_t seed = 100; checked < 60; ++seed) {
    const auto out = seed % 2 == 0 ? OutputTransform::kSoftplus : OutputTransform::kIdentity;
    MlpParams p = random_net(seed, 3, 2, 8, out);
    Rng rng(seed * 7 + 3);
    const Vector x = rng.uniform_vector(3, -1, 1);
    const Vector v = rng.uniform_vector(2, 0, 1);
    const Vector up = rng.uniform_vector(3, -1, 1);
    const auto fwd = predictor_forward(p, x, v);
    if (min_hidden_preactivation(p, fwd.tape) < 1e-3) continue;
    ++checked;

    const Matrix jx = predictor_input_jacobian(p, fwd.tape);
    const Matrix jx_fd = rdfl::numerics::finite_difference_jacobian(
        [&](const Vector& xx) { return predictor_forward(p, xx, v).c_hat; }, x, 1e-5);
    for (std::size_t r = 0; r < 3; ++r)
      EXPECT_LE(rel_err(Vector(jx.row(r)), Vector(jx_fd.row(r))), 1e-4);

    const Vector g = predictor_param_vjp(p, fwd.tape, up).flatten();
    const Vector theta = p.flatten();
    const Vector g_fd = rdfl::numerics::finite_difference_gradient(
        [&](const Vector& t) {
          MlpParams q = p;
          q.assign(t);
          return rdfl::dot(up, predictor_forward(q, x, v).c_hat);
        },
        theta, 1e-5);
    EXPECT_LE(rel_err(g, g_fd), 1e-4) << "seed " << seed;
  }
}

TEST(PredictorParams, FlattenAssignRoundTrip) {
  MlpParams p = random_net(9, 3, 2, 5);
  const Vector flat = p.flatten();
  EXPECT_EQ(flat.size(), p.param_count());
  MlpParams q = make_mlp({3, 2, {5}});
  q.assign(flat);
  EXPECT_EQ(q.flatten(), flat);
  EXPECT_THROW(q.assign(Vector(3)), rdfl::Error);
}

TEST(PredictorParams, KaimingInitSeeded) {
  const MlpParams a = init_kaiming_uniform({4, 3, {32}}, 42);
  const MlpParams b = init_kaiming_uniform({4, 3, {32}}, 42);
  const MlpParams c = init_kaiming_uniform({4, 3, {32}}, 43);
  EXPECT_EQ(a.flatten(), b.flatten());
  EXPECT_NE(a.flatten(), c.flatten());
  const double bound = std::sqrt(2.0 / (1.0 + 0.01 * 0.01)) * std::sqrt(3.0 / 7.0);
  for (std::size_t i = 0; i < a.weights[0].rows(); ++i)
    for (std::size_t j = 0; j < a.weights[0].cols(); ++j)
      EXPECT_LE(std::abs(a.weights[0](i, j)), bound);
}

TEST(Adam, ZeroGradNoDecayLeavesParams) {
  MlpParams p = random_net(2, 2, 2, 4);
  const Vector before = p.flatten();
  AdamState state;
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  sgd_adam_step(p, PredictorGradients::zeros_like(p), state, cfg);
  EXPECT_EQ(p.flatten(), before);
}

TEST(Adam, FirstStepSign) {
  Vector w{1.0};
  AdamState state;
  adam_step(w, Vector{1.0}, state, AdamConfig{});
  EXPECT_LT(w[0], 1.0);
  Vector u{1.0};
  AdamState s2;
  adam_step(u, Vector{-1.0}, s2, AdamConfig{.lr = 1e-3, .weight_decay = 0.0});
  EXPECT_GT(u[0], 1.0);
  // Bias-corrected first step moves by lr.
  EXPECT_NEAR(u[0], 1.0 + 1e-3, 1e-9);
}

TEST(Adam, BitIdenticalTrajectories) {
  auto run = [] {
    MlpParams p = random_net(5, 3, 2, 6);
    AdamState state;
    Rng rng(99);
    for (int step = 0; step < 25; ++step) {
      const auto fwd = predictor_forward(p, rng.uniform_vector(3, -1, 1), rng.uniform_vector(2, 0, 1));
      sgd_adam_step(p, predictor_param_vjp(p, fwd.tape, fwd.c_hat), state, AdamConfig{});
    }
    return p.flatten();
  };
  EXPECT_EQ(run(), run());
}

TEST(Checkpoint, RoundTripIsExact) {
  MlpParams p = random_net(12, 3, 2, 7, OutputTransform::kSoftplus);
  p.output_scale = 2.5;
  p.input_scale = Vector{0.1, 0.1, 0.1, 1, 1};
  const auto dir = std::filesystem::temp_directory_path() / "rdfl_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(p, dir / "checkpoint.bin", dir / "checkpoint.json");
  const MlpParams q = load_checkpoint(dir / "checkpoint.bin", dir / "checkpoint.json");
  EXPECT_EQ(q.flatten(), p.flatten());
  EXPECT_EQ(q.layer_dims, p.layer_dims);
  EXPECT_EQ(q.output, p.output);
  EXPECT_EQ(q.output_scale, p.output_scale);
  EXPECT_EQ(q.input_scale, p.input_scale);

  // Little-endian magic at the start of the blob.
  std::ifstream in(dir / "checkpoint.bin", std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "RDFLCKPT");

  const auto manifest = checkpoint_manifest(p);
  EXPECT_EQ(manifest["tensors"].size(), 4u);
  EXPECT_EQ(manifest["tensors"][0]["name"], "layer0.weight");
}

TEST(Checkpoint, TruncatedFileRejected) {
  const MlpParams p = random_net(13, 2, 1, 3);
  const auto dir = std::filesystem::temp_directory_path() / "rdfl_ckpt_trunc";
  std::filesystem::create_directories(dir);
  save_checkpoint(p, dir / "c.bin", dir / "c.json");
  std::filesystem::resize_file(dir / "c.bin", std::filesystem::file_size(dir / "c.bin") - 8);
  EXPECT_THROW(load_checkpoint(dir / "c.bin", dir / "c.json"), rdfl::Error);
}

}  // namespace
