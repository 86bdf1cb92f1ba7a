#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdfl/optlayer/program.hpp"
#include "rdfl/problems/losses.hpp"
#include "rdfl/problems/world.hpp"

namespace rdfl::harness {

enum class Scheme { kRdflUnroll, kRdflImplicit, kSdfl, kPto };

std::string_view to_string(Scheme scheme) noexcept;
/// Throws Error{kConfigError} on an unknown name.
Scheme scheme_from_string(std::string_view name);

/// One training run. Every field except `seed` has a default; see
/// run_config_from_json for the file format.
struct RunConfig {
  optlayer::ProgramSpec program;
  std::size_t features = 5;  // d; matching always uses 5 per player
  problems::NewsvendorWorldConfig newsvendor_world;
  problems::MatchingWorldConfig matching_world;
  std::size_t samples = 1000;
  std::string data_csv;        // when set, samples come from this file
  std::uint64_t data_seed = 0;  // 0: use seed

  Scheme scheme = Scheme::kRdflUnroll;
  std::size_t K = 10;
  double tol = 0.2;
  double damping = 0.5;
  std::size_t max_fp_iter = 100;

  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  problems::LossMode loss_mode = problems::LossMode::kRegret;
  std::vector<std::size_t> hidden{32};
  /// Fraction of a single epoch's samples allowed to fail with a singular or
  /// unstable linearization before the run aborts.
  double max_skip_fraction = 0.2;

  bool is_matching() const noexcept;
  std::uint64_t effective_data_seed() const noexcept { return data_seed ? data_seed : seed; }
};

/// Keys mirror the RunConfig fields; "program" is a program spec object and
/// "world" holds the world-model settings for that problem. "seed" is required.
/// Throws Error{kConfigError} on missing or malformed fields.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

/// Newsvendor layout used by the bundled experiments: s1 = 0, s2 = capacity,
/// total order between 30% and 70% of n·capacity.
optlayer::NewsvendorSpec default_newsvendor_spec(std::size_t n, double capacity = 500.0,
                                                 double reg_eps = 1e-2);
/// Matching with S = players / 2.
optlayer::MatchingSpec default_matching_spec(std::size_t players, double reg_eps = 0.5);

/// Ground-truth world for the config's problem.
std::unique_ptr<problems::WorldModel> make_world(const RunConfig& config);

}  // namespace rdfl::harness
