#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdfl/harness/config.hpp"
#include "rdfl/harness/gradcheck.hpp"
#include "rdfl/harness/train.hpp"

namespace rdfl::harness {

struct SensitivityRow {
  std::size_t K = 0;
  double seconds_per_epoch = 0.0;
  double best_val_rmse = 0.0;
  double test_rmse = 0.0;
};

/// Trains rdfl_unroll once per K on one shared dataset and writes
/// sensitivity.csv.
std::vector<SensitivityRow> run_sensitivity(const RunConfig& config,
                                            const std::vector<std::size_t>& K_list,
                                            const std::filesystem::path& out_dir);

struct BenchOptions {
  std::vector<Scheme> schemes{Scheme::kRdflUnroll, Scheme::kRdflImplicit, Scheme::kSdfl,
                              Scheme::kPto};
  std::vector<std::uint64_t> seeds{1};
  /// Overrides applied per scheme on top of the base config.
  std::size_t unroll_K = 10;
  double implicit_tol = 0.2;
};

BenchOptions bench_options_from_json(const nlohmann::json& j);

/// Every (seed, scheme) pair as its own artifact under out_dir, then
/// emit_report over all of them. Schemes trained with the same seed share
/// one dataset.
nlohmann::json run_bench(const RunConfig& config, const BenchOptions& options,
                         const std::filesystem::path& out_dir);

struct EquivalenceOptions {
  std::vector<std::size_t> K_list{1, 2, 5, 10, 20, 30};
  std::size_t samples = 3;  // first samples of the dataset
  std::string checkpoint;   // directory with checkpoint.bin/json; empty: initial predictor
};

EquivalenceOptions equivalence_options_from_json(const nlohmann::json& j);

/// Unrolled-vs-implicit gradient gaps for the config's problem and predictor;
/// writes equivalence.json.
nlohmann::json run_equivalence(const RunConfig& config, const EquivalenceOptions& options,
                               const std::filesystem::path& out_dir);

struct GradcheckSuiteOptions {
  std::size_t instances = 30;
  double threshold = 1e-3;
  std::size_t K = 5;
  std::uint64_t first_seed = 1;
  /// Attempts per requested instance before giving up on finding one away
  /// from solver kinks.
  std::size_t max_attempts_factor = 4;
};

GradcheckSuiteOptions gradcheck_options_from_json(const nlohmann::json& j);

/// Wraps the layer factory; tests use it to inject a faulty layer.
using FactoryWrapper = std::function<LayerFactory(LayerFactory)>;

struct GradcheckSuiteResult {
  std::vector<double> unroll_errors;
  std::vector<double> implicit_errors;
  std::size_t skipped_instances = 0;
  double max_unroll_error = 0.0;
  double max_implicit_error = 0.0;
  bool passed = false;
};

/// Finite-difference checks of both schemes on small newsvendor instances
/// (n = 4, reg_eps = 1e-2). Instances whose unrolled trajectory or
/// equilibrium sits near a solver kink are skipped and replaced.
GradcheckSuiteResult run_gradcheck_suite(const GradcheckSuiteOptions& options,
                                         const FactoryWrapper& wrap = {});

nlohmann::json to_json(const GradcheckSuiteResult& r);

}  // namespace rdfl::harness
