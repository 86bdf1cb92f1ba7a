#include "rdfl/harness/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/harness/parallel.hpp"
#include "rdfl/numerics/linalg.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/optlayer/program_io.hpp"
#include "rdfl/predictor/adam.hpp"
#include "rdfl/predictor/checkpoint.hpp"
#include "rdfl/problems/baselines.hpp"
#include "rdfl/recursive/coupled_layer.hpp"
#include "rdfl/recursive/fixed_point.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace rdfl::harness {

namespace {

recursive::FixedPointOptions loop_options(const RunConfig& config, bool linearize) {
  return {.tol = config.tol,
          .max_iter = config.max_fp_iter,
          .damping = config.damping,
          .linearize_at_solution = linearize};
}

bool skippable(ErrorCode code) {
  return code == ErrorCode::kSingularKkt || code == ErrorCode::kUnstableEquilibrium ||
         code == ErrorCode::kNotConverged;
}

void append_number(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace

optlayer::ConvexProgram make_program(const RunConfig& config) {
  return optlayer::build_program(config.program);
}

problems::Dataset make_dataset(const RunConfig& config, const optlayer::ConvexProgram& program) {
  if (!config.data_csv.empty()) {
    return problems::load_dataset_csv(config.data_csv, program, config.effective_data_seed());
  }
  const auto world = make_world(config);
  return problems::generate_dataset(*world, program, config.samples, config.effective_data_seed());
}

predictor::MlpParams make_predictor(const RunConfig& config, const optlayer::ConvexProgram& program,
                                    const problems::Dataset& data) {
  const std::size_t n = program.n();
  predictor::MlpShape shape{n, config.features, config.hidden};
  auto params = predictor::init_kaiming_uniform(shape, config.seed,
                                                predictor::OutputTransform::kSoftplus);
  double x_scale = 1.0;
  if (const auto box = program.box()) x_scale = std::max(norm_inf(box->first), norm_inf(box->second));
  params.input_scale = Vector(n + config.features, 1.0);
  for (std::size_t i = 0; i < n; ++i) params.input_scale[i] = 1.0 / x_scale;

  double mean_cost = 0.0;
  std::size_t count = 0;
  for (std::size_t idx : data.split.train) {
    for (double c : data.samples[idx].c_true) mean_cost += std::abs(c);
    count += n;
  }
  mean_cost = count ? mean_cost / static_cast<double>(count) : 1.0;
  params.output_scale = mean_cost > 0.0 ? mean_cost / std::numbers::ln2 : 1.0;
  return params;
}

Vector scheme_decision(const RunConfig& config, const predictor::MlpParams& params,
                       const optlayer::ConvexProgram& program, const Vector& v) {
  switch (config.scheme) {
    case Scheme::kRdflUnroll: {
      const recursive::CoupledLayer layer(params, program);
      Vector x = program.initial_point();
      for (std::size_t k = 0; k < config.K; ++k) x = layer.apply(x, v).x;
      return x;
    }
    case Scheme::kRdflImplicit: {
      const recursive::CoupledLayer layer(params, program);
      return recursive::fixed_point_solve(layer, program.initial_point(), v,
                                          loop_options(config, false))
          .x_star;
    }
    case Scheme::kSdfl:
    case Scheme::kPto:
      return problems::baseline_decision(params, v, program);
  }
  return {};
}

SampleOutcome scheme_sample_gradient(const RunConfig& config, const predictor::MlpParams& params,
                                     const optlayer::ConvexProgram& program,
                                     const problems::Sample& sample) {
  SampleOutcome out;
  switch (config.scheme) {
    case Scheme::kRdflUnroll: {
      const recursive::CoupledLayer layer(params, program);
      const auto trace = recursive::unroll_forward(layer, program.initial_point(), sample.v, config.K);
      out.x_pred = trace.x_seq.back();
      const auto loss = problems::decision_loss(config.loss_mode, program, out.x_pred,
                                                sample.c_true, sample.x_oracle);
      out.loss = loss.value;
      out.gradient = recursive::unroll_gradient(trace, loss.grad_x);
      out.rho = numerics::spectral_radius_estimate(trace.steps.back().jacobian).rho;
      break;
    }
    case Scheme::kRdflImplicit: {
      const recursive::CoupledLayer layer(params, program);
      const auto eq = recursive::fixed_point_solve(layer, program.initial_point(), sample.v,
                                                   loop_options(config, true));
      recursive::require_converged(eq);
      out.x_pred = eq.x_star;
      const auto loss = problems::decision_loss(config.loss_mode, program, out.x_pred,
                                                sample.c_true, sample.x_oracle);
      out.loss = loss.value;
      out.gradient = recursive::implicit_gradient(layer, eq, sample.v, loss.grad_x);
      out.fp_iterations = static_cast<double>(eq.iterations);
      out.rho = eq.rho_hat;
      break;
    }
    case Scheme::kSdfl: {
      auto r = problems::sdfl_baseline_step(params, sample, program, config.loss_mode);
      out.gradient = std::move(r.gradient);
      out.x_pred = std::move(r.x_pred);
      out.loss = r.loss;
      break;
    }
    case Scheme::kPto: {
      auto r = problems::pto_baseline_step(params, sample, program);
      out.gradient = std::move(r.gradient);
      out.x_pred = std::move(r.x_pred);
      out.loss = r.loss;
      break;
    }
  }
  return out;
}

double evaluate_rmse(const RunConfig& config, const predictor::MlpParams& params,
                     const optlayer::ConvexProgram& program, const problems::Dataset& data,
                     const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  std::vector<Vector> pred(indices.size());
  std::vector<Vector> oracle(indices.size());
  parallel_for(indices.size(), worker_count(), [&](std::size_t k) {
    const auto& s = data.samples[indices[k]];
    pred[k] = scheme_decision(config, params, program, s.v);
    oracle[k] = s.x_oracle;
  });
  return problems::decision_rmse(pred, oracle);
}

TrainResult train(const RunConfig& config, const optlayer::ConvexProgram& program,
                  const problems::Dataset& data) {
  TrainResult result;
  result.config = config;
  result.clipped_prices = data.clipped_prices;
  result.data_max_rho = data.max_rho;

  auto params = make_predictor(config, program, data);
  result.initial_params = params;
  result.best_params = params;
  result.best_val_rmse = evaluate_rmse(config, params, program, data, data.split.validation);

  predictor::AdamConfig adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  predictor::AdamState adam_state;
  Vector theta = params.flatten();
  const std::size_t workers = worker_count();
  const auto& train_idx = data.split.train;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    auto rng = numerics::Rng::stream(config.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng.engine());

    std::vector<Vector> x_pred;
    std::vector<Vector> x_oracle;
    EpochMetrics m;
    m.epoch = epoch;
    std::size_t used = 0;
    const auto t0 = std::chrono::steady_clock::now();

    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      std::vector<SampleOutcome> outcomes(count);
      std::vector<bool> skipped(count, false);
      parallel_for(count, workers, [&](std::size_t k) {
        try {
          outcomes[k] = scheme_sample_gradient(config, params, program, data.samples[order[first + k]]);
        } catch (const Error& e) {
          if (!skippable(e.code())) throw;
          skipped[k] = true;
        }
      });

      Vector grad(theta.size(), 0.0);
      std::size_t batch_used = 0;
      for (std::size_t k = 0; k < count; ++k) {
        if (skipped[k]) {
          ++m.skipped;
          continue;
        }
        const auto& o = outcomes[k];
        const auto& s = data.samples[order[first + k]];
        grad += o.gradient;
        ++batch_used;
        m.train_loss += o.loss;
        m.train_regret += problems::regret_at(program, o.x_pred, s.c_true, s.x_oracle).value;
        m.mean_fp_iterations += o.fp_iterations;
        m.mean_rho += o.rho;
        x_pred.push_back(o.x_pred);
        x_oracle.push_back(s.x_oracle);
      }
      if (static_cast<double>(m.skipped) > config.max_skip_fraction * static_cast<double>(order.size())) {
        fail(ErrorCode::kTooManySkipped,
             "train: epoch " + std::to_string(epoch) + " skipped " + std::to_string(m.skipped) +
                 " of " + std::to_string(order.size()) +
                 " samples (singular or unstable linearization)");
      }
      if (batch_used == 0) continue;
      grad *= 1.0 / static_cast<double>(batch_used);
      predictor::adam_step(theta, grad, adam_state, adam);
      params.assign(theta);
      used += batch_used;
    }
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (used > 0) {
      const double inv = 1.0 / static_cast<double>(used);
      m.train_loss *= inv;
      m.train_regret *= inv;
      m.mean_fp_iterations *= inv;
      m.mean_rho *= inv;
      m.train_rmse = problems::decision_rmse(x_pred, x_oracle);
    }
    m.val_rmse = evaluate_rmse(config, params, program, data, data.split.validation);
    if (m.val_rmse < result.best_val_rmse) {
      result.best_val_rmse = m.val_rmse;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    result.epochs.push_back(m);
  }

  const auto& test = data.split.test;
  result.test_decisions.resize(test.size());
  result.test_oracles.resize(test.size());
  parallel_for(test.size(), workers, [&](std::size_t k) {
    const auto& s = data.samples[test[k]];
    result.test_decisions[k] = scheme_decision(config, result.best_params, program, s.v);
    result.test_oracles[k] = s.x_oracle;
  });
  result.test_rmse =
      test.empty() ? 0.0 : problems::decision_rmse(result.test_decisions, result.test_oracles);
  return result;
}

TrainResult train(const RunConfig& config) {
  const auto program = make_program(config);
  const auto data = make_dataset(config, program);
  auto result = train(config, program, data);
  if (config.data_csv.empty()) result.world = make_world(config)->describe();
  return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& epochs) {
  std::string out =
      "epoch,train_rmse,val_rmse,train_regret,train_loss,mean_fp_iterations,mean_rho,skipped\n";
  for (const auto& m : epochs) {
    out += std::to_string(m.epoch);
    for (double x : {m.train_rmse, m.val_rmse, m.train_regret, m.train_loss, m.mean_fp_iterations,
                     m.mean_rho}) {
      out += ',';
      append_number(out, x);
    }
    out += ',' + std::to_string(m.skipped) + '\n';
  }
  return out;
}

void write_artifact(const TrainResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "metrics.csv", metrics_csv(result.epochs));

  std::string timing = "epoch,seconds\n";
  double total_seconds = 0.0;
  for (const auto& m : result.epochs) {
    timing += std::to_string(m.epoch) + ',';
    append_number(timing, m.seconds);
    timing += '\n';
    total_seconds += m.seconds;
  }
  write_text(out_dir / "timing.csv", timing);

  std::string decisions = "sample,coordinate,decision,oracle\n";
  for (std::size_t s = 0; s < result.test_decisions.size(); ++s) {
    for (std::size_t i = 0; i < result.test_decisions[s].size(); ++i) {
      decisions += std::to_string(s) + ',' + std::to_string(i) + ',';
      append_number(decisions, result.test_decisions[s][i]);
      decisions += ',';
      append_number(decisions, result.test_oracles[s][i]);
      decisions += '\n';
    }
  }
  write_text(out_dir / "test_decisions.csv", decisions);

  predictor::save_checkpoint(result.best_params, out_dir / "checkpoint.bin",
                             out_dir / "checkpoint.json");

  nlohmann::json summary;
  summary["scheme"] = std::string(to_string(result.config.scheme));
  summary["seed"] = result.config.seed;
  summary["epochs"] = result.epochs.size();
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_rmse"] = result.best_val_rmse;
  summary["test_rmse"] = result.test_rmse;
  summary["mean_epoch_seconds"] =
      result.epochs.empty() ? 0.0 : total_seconds / static_cast<double>(result.epochs.size());
  summary["clipped_prices"] = result.clipped_prices;
  summary["data_max_rho"] = result.data_max_rho;
  summary["config"] = to_json(result.config);
  if (!result.world.is_null()) summary["world"] = result.world;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace rdfl::harness
