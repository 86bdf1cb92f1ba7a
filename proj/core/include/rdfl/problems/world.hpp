#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include <nlohmann/json.hpp>

#include "rdfl/numerics/matrix.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/optlayer/program.hpp"
#include "rdfl/recursive/layer.hpp"

namespace rdfl::problems {

/// Ground-truth cost response c(x; v, noise). Responses are elementwise in x,
/// so the x-Jacobian is diagonal.
class WorldModel {
 public:
  virtual ~WorldModel() = default;

  virtual std::size_t n() const = 0;
  virtual std::size_t d() const = 0;

  /// Costs at decision x. Entries below the floor are clipped to it; the
  /// number of clipped entries is added to *clipped when given.
  virtual Vector response(const Vector& x, const Vector& v, const Vector& noise,
                          std::size_t* clipped = nullptr) const = 0;
  /// Diagonal of ∂c/∂x (zero where clipped).
  virtual Vector response_slope(const Vector& x, const Vector& v, const Vector& noise) const = 0;

  virtual Vector draw_features(numerics::Rng& rng) const = 0;
  virtual Vector draw_noise(numerics::Rng& rng) const = 0;

  virtual nlohmann::json describe() const = 0;
};

// c(x) = α ⊙ (1 + w·W v) − β ⊙ tanh(x / response_scale) + noise, floored at c_min.
struct NewsvendorWorldConfig {
  double alpha_low = 8.0;
  double alpha_high = 12.0;
  double beta = 3.0;
  double noise_sigma = 0.2;
  double response_scale = 300.0;
  double c_min = 0.5;
  double feature_weight = 0.1;
  std::uint64_t world_seed = 7;
};

class NewsvendorWorld final : public WorldModel {
 public:
  /// Draws α ~ U[alpha_low, alpha_high] and W ~ U[−1, 1]^{n×d} from world_seed.
  /// Throws Error{kInvalidArgument} unless α − β ≥ c_min > 0.
  NewsvendorWorld(std::size_t n, std::size_t d, const NewsvendorWorldConfig& config);
  NewsvendorWorld(Vector alpha, Vector beta, Matrix feature_map, const NewsvendorWorldConfig& config);

  std::size_t n() const override { return alpha_.size(); }
  std::size_t d() const override { return feature_map_.cols(); }
  Vector response(const Vector& x, const Vector& v, const Vector& noise,
                  std::size_t* clipped = nullptr) const override;
  Vector response_slope(const Vector& x, const Vector& v, const Vector& noise) const override;
  Vector draw_features(numerics::Rng& rng) const override;
  Vector draw_noise(numerics::Rng& rng) const override;
  nlohmann::json describe() const override;

  const Vector& alpha() const noexcept { return alpha_; }
  const Vector& beta() const noexcept { return beta_; }
  const NewsvendorWorldConfig& config() const noexcept { return config_; }

 private:
  void validate() const;
  Vector base_price(const Vector& v) const;

  Vector alpha_;
  Vector beta_;
  Matrix feature_map_;
  NewsvendorWorldConfig config_;
};

// Features per sample, d = 5·players: driver pickup time and urgency, rider
// pickup time, peak indicator and fatigue, each in [0, 1].
// c_ij = driver regret + rider regret + feedback·tanh(x_ij / response_scale) + noise, with
//   driver regret = base + distance_weight·|a_i − b_j| + urgency_weight·u_i
//   rider regret  = peak_weight·k_j·|a_i − b_j| + fatigue_weight·f_j + pair offset.
struct MatchingWorldConfig {
  double base = 0.2;
  double distance_weight = 1.0;
  double urgency_weight = 0.5;
  double peak_weight = 0.5;
  double fatigue_weight = 0.3;
  double pair_offset = 0.2;  // fixed U[0, pair_offset] per pair, from world_seed
  double feedback = 0.5;
  double response_scale = 1.0;
  double noise_sigma = 0.02;
  double c_min = 0.01;
  std::uint64_t world_seed = 11;
};

class MatchingWorld final : public WorldModel {
 public:
  MatchingWorld(std::size_t players, const MatchingWorldConfig& config);

  std::size_t n() const override { return players_ * players_; }
  std::size_t d() const override { return 5 * players_; }
  Vector response(const Vector& x, const Vector& v, const Vector& noise,
                  std::size_t* clipped = nullptr) const override;
  Vector response_slope(const Vector& x, const Vector& v, const Vector& noise) const override;
  Vector draw_features(numerics::Rng& rng) const override;
  Vector draw_noise(numerics::Rng& rng) const override;
  nlohmann::json describe() const override;

  std::size_t players() const noexcept { return players_; }

 private:
  double static_cost(std::size_t i, std::size_t j, const Vector& v) const;

  std::size_t players_;
  Vector offsets_;
  MatchingWorldConfig config_;
};

/// x ↦ solve(program, c_true(x; v, noise)). Parameter-free; used to compute
/// closed-loop ground truth and its contraction estimate.
class TrueLoopLayer final : public recursive::RecursiveLayer {
 public:
  TrueLoopLayer(const WorldModel& world, const optlayer::ConvexProgram& program, Vector noise);

  std::size_t dim() const override { return program_->n(); }
  std::size_t param_count() const override { return 0; }
  recursive::StepOutput apply(const Vector& x, const Vector& v) const override;
  recursive::Linearization linearize(const Vector& x, const Vector& v) const override;

 private:
  const WorldModel* world_;
  const optlayer::ConvexProgram* program_;
  Vector noise_;
};

NewsvendorWorldConfig newsvendor_world_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NewsvendorWorldConfig& c);
MatchingWorldConfig matching_world_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MatchingWorldConfig& c);

}  // namespace rdfl::problems
