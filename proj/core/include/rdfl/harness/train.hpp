#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdfl/harness/config.hpp"
#include "rdfl/optlayer/program.hpp"
#include "rdfl/predictor/mlp.hpp"
#include "rdfl/problems/dataset.hpp"

namespace rdfl::harness {

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_rmse = 0.0;  // decisions taken during the epoch's forward passes
  double val_rmse = 0.0;    // after the epoch's last update
  double train_regret = 0.0;
  double train_loss = 0.0;  // scheme's own training loss
  double seconds = 0.0;     // wall clock of the mini-batch loop
  double mean_fp_iterations = 0.0;
  double mean_rho = 0.0;
  std::size_t skipped = 0;
};

struct TrainResult {
  RunConfig config;
  predictor::MlpParams initial_params;
  predictor::MlpParams best_params;
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;  // 0: the initial parameters
  double best_val_rmse = 0.0;
  double test_rmse = 0.0;
  std::vector<Vector> test_decisions;
  std::vector<Vector> test_oracles;
  nlohmann::json world;
  std::size_t clipped_prices = 0;
  double data_max_rho = 0.0;
};

optlayer::ConvexProgram make_program(const RunConfig& config);

/// Generated from the config's world, or loaded from config.data_csv.
problems::Dataset make_dataset(const RunConfig& config, const optlayer::ConvexProgram& program);

/// Predictor for the config with fixed input/output normalization: the
/// decision slot is divided by the largest box bound and ĉ = scale·softplus(z)
/// with scale = mean training cost / ln 2.
predictor::MlpParams make_predictor(const RunConfig& config, const optlayer::ConvexProgram& program,
                                    const problems::Dataset& data);

/// Decision the scheme takes for one sample at inference.
Vector scheme_decision(const RunConfig& config, const predictor::MlpParams& params,
                       const optlayer::ConvexProgram& program, const Vector& v);

struct SampleOutcome {
  Vector gradient;
  Vector x_pred;
  double loss = 0.0;
  double fp_iterations = 0.0;
  double rho = 0.0;
};

/// Forward and backward of one training sample under config.scheme.
SampleOutcome scheme_sample_gradient(const RunConfig& config, const predictor::MlpParams& params,
                                     const optlayer::ConvexProgram& program,
                                     const problems::Sample& sample);

double evaluate_rmse(const RunConfig& config, const predictor::MlpParams& params,
                     const optlayer::ConvexProgram& program, const problems::Dataset& data,
                     const std::vector<std::size_t>& indices);

/// Mini-batch Adam over the training split, best-validation selection, test
/// evaluation. Throws Error{kTooManySkipped} when more than
/// max_skip_fraction of an epoch's samples fail.
TrainResult train(const RunConfig& config, const optlayer::ConvexProgram& program,
                  const problems::Dataset& data);
TrainResult train(const RunConfig& config);

/// metrics.csv, timing.csv, summary.json, checkpoint.bin, checkpoint.json,
/// test_decisions.csv.
void write_artifact(const TrainResult& result, const std::filesystem::path& out_dir);

std::string metrics_csv(const std::vector<EpochMetrics>& epochs);

}  // namespace rdfl::harness
