#include "rdfl/problems/world.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/optlayer/sensitivity.hpp"
#include "rdfl/optlayer/solver.hpp"

namespace rdfl::problems {

namespace {

double sech2(double t) {
  const double c = std::cosh(t);
  return 1.0 / (c * c);
}

void check_length(const Vector& a, std::size_t n, const char* what) {
  if (a.size() != n) {
    fail(ErrorCode::kDimensionMismatch, std::string("world response: ") + what + " has length " +
                                            std::to_string(a.size()) + ", expected " +
                                            std::to_string(n));
  }
}

}  // namespace

NewsvendorWorld::NewsvendorWorld(std::size_t n, std::size_t d, const NewsvendorWorldConfig& config)
    : config_(config) {
  require(n > 0 && d > 0, ErrorCode::kInvalidArgument, "newsvendor world: n and d must be positive");
  require(config.alpha_low <= config.alpha_high, ErrorCode::kInvalidArgument,
          "newsvendor world: alpha_low > alpha_high");
  numerics::Rng rng(config.world_seed);
  alpha_ = rng.uniform_vector(n, config.alpha_low, config.alpha_high);
  beta_ = Vector(n, config.beta);
  feature_map_ = rng.uniform_matrix(n, d, -1.0, 1.0);
  validate();
}

NewsvendorWorld::NewsvendorWorld(Vector alpha, Vector beta, Matrix feature_map,
                                 const NewsvendorWorldConfig& config)
    : alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      feature_map_(std::move(feature_map)),
      config_(config) {
  validate();
}

void NewsvendorWorld::validate() const {
  require(alpha_.size() == beta_.size() && feature_map_.rows() == alpha_.size(),
          ErrorCode::kDimensionMismatch, "newsvendor world: alpha, beta and W disagree");
  require(config_.c_min > 0.0, ErrorCode::kInvalidArgument, "newsvendor world: c_min must be > 0");
  require(config_.response_scale > 0.0, ErrorCode::kInvalidArgument,
          "newsvendor world: response_scale must be > 0");
  require(config_.noise_sigma >= 0.0, ErrorCode::kInvalidArgument,
          "newsvendor world: noise_sigma must be >= 0");
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (beta_[i] < 0.0 || alpha_[i] - beta_[i] < config_.c_min) {
      fail(ErrorCode::kInvalidArgument,
           "newsvendor world: need beta >= 0 and alpha - beta >= c_min at index " +
               std::to_string(i));
    }
  }
}

Vector NewsvendorWorld::base_price(const Vector& v) const {
  check_length(v, d(), "v");
  const Vector wv = feature_map_ * v;
  Vector out(n());
  for (std::size_t i = 0; i < n(); ++i) out[i] = alpha_[i] * (1.0 + config_.feature_weight * wv[i]);
  return out;
}

Vector NewsvendorWorld::response(const Vector& x, const Vector& v, const Vector& noise,
                                 std::size_t* clipped) const {
  check_length(x, n(), "x");
  check_length(noise, n(), "noise");
  Vector c = base_price(v);
  for (std::size_t i = 0; i < n(); ++i) {
    c[i] += noise[i] - beta_[i] * std::tanh(x[i] / config_.response_scale);
    if (c[i] < config_.c_min) {
      c[i] = config_.c_min;
      if (clipped) ++*clipped;
    }
  }
  return c;
}

Vector NewsvendorWorld::response_slope(const Vector& x, const Vector& v, const Vector& noise) const {
  check_length(x, n(), "x");
  const Vector base = base_price(v);
  Vector slope(n());
  for (std::size_t i = 0; i < n(); ++i) {
    const double t = x[i] / config_.response_scale;
    const double c = base[i] + noise[i] - beta_[i] * std::tanh(t);
    slope[i] = c < config_.c_min ? 0.0 : -beta_[i] * sech2(t) / config_.response_scale;
  }
  return slope;
}

Vector NewsvendorWorld::draw_features(numerics::Rng& rng) const {
  return rng.uniform_vector(d(), 0.0, 1.0);
}

Vector NewsvendorWorld::draw_noise(numerics::Rng& rng) const {
  if (config_.noise_sigma == 0.0) return Vector(n(), 0.0);
  return rng.normal_vector(n(), config_.noise_sigma);
}

nlohmann::json NewsvendorWorld::describe() const {
  auto j = to_json(config_);
  j["kind"] = "newsvendor";
  j["n"] = n();
  j["d"] = d();
  j["alpha"] = alpha_.values();
  return j;
}

MatchingWorld::MatchingWorld(std::size_t players, const MatchingWorldConfig& config)
    : players_(players), config_(config) {
  require(players > 0, ErrorCode::kInvalidArgument, "matching world: players must be positive");
  require(config.c_min > 0.0, ErrorCode::kInvalidArgument, "matching world: c_min must be > 0");
  require(config.response_scale > 0.0, ErrorCode::kInvalidArgument,
          "matching world: response_scale must be > 0");
  require(config.noise_sigma >= 0.0, ErrorCode::kInvalidArgument,
          "matching world: noise_sigma must be >= 0");
  numerics::Rng rng(config.world_seed);
  offsets_ = rng.uniform_vector(players * players, 0.0, config.pair_offset);
}

double MatchingWorld::static_cost(std::size_t i, std::size_t j, const Vector& v) const {
  const std::size_t p = players_;
  const double a = v[i];
  const double u = v[p + i];
  const double b = v[2 * p + j];
  const double k = v[3 * p + j];
  const double f = v[4 * p + j];
  const double gap = std::abs(a - b);
  const double driver = config_.base + config_.distance_weight * gap + config_.urgency_weight * u;
  const double rider = config_.peak_weight * k * gap + config_.fatigue_weight * f;
  return driver + rider + offsets_[i * p + j];
}

Vector MatchingWorld::response(const Vector& x, const Vector& v, const Vector& noise,
                               std::size_t* clipped) const {
  check_length(x, n(), "x");
  check_length(v, d(), "v");
  check_length(noise, n(), "noise");
  Vector c(n());
  for (std::size_t i = 0; i < players_; ++i) {
    for (std::size_t j = 0; j < players_; ++j) {
      const std::size_t k = i * players_ + j;
      c[k] = static_cost(i, j, v) + noise[k] +
             config_.feedback * std::tanh(x[k] / config_.response_scale);
      if (c[k] < config_.c_min) {
        c[k] = config_.c_min;
        if (clipped) ++*clipped;
      }
    }
  }
  return c;
}

Vector MatchingWorld::response_slope(const Vector& x, const Vector& v, const Vector& noise) const {
  check_length(x, n(), "x");
  check_length(v, d(), "v");
  Vector slope(n());
  for (std::size_t i = 0; i < players_; ++i) {
    for (std::size_t j = 0; j < players_; ++j) {
      const std::size_t k = i * players_ + j;
      const double t = x[k] / config_.response_scale;
      const double c = static_cost(i, j, v) + noise[k] + config_.feedback * std::tanh(t);
      slope[k] = c < config_.c_min ? 0.0 : config_.feedback * sech2(t) / config_.response_scale;
    }
  }
  return slope;
}

Vector MatchingWorld::draw_features(numerics::Rng& rng) const {
  return rng.uniform_vector(d(), 0.0, 1.0);
}

Vector MatchingWorld::draw_noise(numerics::Rng& rng) const {
  if (config_.noise_sigma == 0.0) return Vector(n(), 0.0);
  return rng.normal_vector(n(), config_.noise_sigma);
}

nlohmann::json MatchingWorld::describe() const {
  auto j = to_json(config_);
  j["kind"] = "matching";
  j["players"] = players_;
  return j;
}

TrueLoopLayer::TrueLoopLayer(const WorldModel& world, const optlayer::ConvexProgram& program,
                             Vector noise)
    : world_(&world), program_(&program), noise_(std::move(noise)) {
  require(world.n() == program.n(), ErrorCode::kDimensionMismatch,
          "true loop: world and program dimensions differ");
  require(noise_.size() == world.n(), ErrorCode::kDimensionMismatch,
          "true loop: noise length differs from n");
}

recursive::StepOutput TrueLoopLayer::apply(const Vector& x, const Vector& v) const {
  Vector c = world_->response(x, v, noise_);
  auto sol = optlayer::solve(*program_, c);
  return {std::move(sol.x), std::move(c)};
}

recursive::Linearization TrueLoopLayer::linearize(const Vector& x, const Vector& v) const {
  Vector c = world_->response(x, v, noise_);
  auto sol = optlayer::solve(*program_, c);
  Matrix jac = optlayer::kkt_sensitivity(*program_, sol);
  const Vector slope = world_->response_slope(x, v, noise_);
  for (std::size_t i = 0; i < jac.rows(); ++i) {
    for (std::size_t j = 0; j < jac.cols(); ++j) jac(i, j) *= slope[j];
  }
  recursive::Linearization out;
  out.x_out = std::move(sol.x);
  out.c = std::move(c);
  out.jacobian = std::move(jac);
  out.param_vjp = [](const Vector&) { return Vector(); };
  return out;
}

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

template <class Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

NewsvendorWorldConfig newsvendor_world_from_json(const nlohmann::json& j) {
  return guarded("newsvendor world config", [&] {
    NewsvendorWorldConfig c;
    read_field(j, "alpha_low", c.alpha_low);
    read_field(j, "alpha_high", c.alpha_high);
    read_field(j, "beta", c.beta);
    read_field(j, "noise_sigma", c.noise_sigma);
    read_field(j, "response_scale", c.response_scale);
    read_field(j, "c_min", c.c_min);
    read_field(j, "feature_weight", c.feature_weight);
    read_field(j, "world_seed", c.world_seed);
    return c;
  });
}

nlohmann::json to_json(const NewsvendorWorldConfig& c) {
  return {{"alpha_low", c.alpha_low},       {"alpha_high", c.alpha_high},
          {"beta", c.beta},                 {"noise_sigma", c.noise_sigma},
          {"response_scale", c.response_scale}, {"c_min", c.c_min},
          {"feature_weight", c.feature_weight}, {"world_seed", c.world_seed}};
}

MatchingWorldConfig matching_world_from_json(const nlohmann::json& j) {
  return guarded("matching world config", [&] {
    MatchingWorldConfig c;
    read_field(j, "base", c.base);
    read_field(j, "distance_weight", c.distance_weight);
    read_field(j, "urgency_weight", c.urgency_weight);
    read_field(j, "peak_weight", c.peak_weight);
    read_field(j, "fatigue_weight", c.fatigue_weight);
    read_field(j, "pair_offset", c.pair_offset);
    read_field(j, "feedback", c.feedback);
    read_field(j, "response_scale", c.response_scale);
    read_field(j, "noise_sigma", c.noise_sigma);
    read_field(j, "c_min", c.c_min);
    read_field(j, "world_seed", c.world_seed);
    return c;
  });
}

nlohmann::json to_json(const MatchingWorldConfig& c) {
  return {{"base", c.base},
          {"distance_weight", c.distance_weight},
          {"urgency_weight", c.urgency_weight},
          {"peak_weight", c.peak_weight},
          {"fatigue_weight", c.fatigue_weight},
          {"pair_offset", c.pair_offset},
          {"feedback", c.feedback},
          {"response_scale", c.response_scale},
          {"noise_sigma", c.noise_sigma},
          {"c_min", c.c_min},
          {"world_seed", c.world_seed}};
}

}  // namespace rdfl::problems
