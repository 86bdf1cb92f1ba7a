#include "rdfl/harness/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "rdfl/error.hpp"
#include "rdfl/harness/report.hpp"
#include "rdfl/predictor/checkpoint.hpp"
#include "rdfl/recursive/coupled_layer.hpp"
#include "rdfl/recursive/equivalence.hpp"
#include "rdfl/recursive/fixed_point.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace rdfl::harness {

namespace {

void append_number(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

double mean_seconds(const TrainResult& r) {
  if (r.epochs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : r.epochs) s += m.seconds;
  return s / static_cast<double>(r.epochs.size());
}

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

std::vector<SensitivityRow> run_sensitivity(const RunConfig& config,
                                            const std::vector<std::size_t>& K_list,
                                            const std::filesystem::path& out_dir) {
  require(!K_list.empty(), ErrorCode::kConfigError, "sensitivity: K_list is empty");
  const auto program = make_program(config);
  const auto data = make_dataset(config, program);
  std::vector<SensitivityRow> rows;
  for (std::size_t K : K_list) {
    RunConfig c = config;
    c.scheme = Scheme::kRdflUnroll;
    c.K = K;
    const auto r = train(c, program, data);
    rows.push_back({K, mean_seconds(r), r.best_val_rmse, r.test_rmse});
  }
  std::filesystem::create_directories(out_dir);
  std::string csv = "K,seconds_per_epoch,best_val_rmse,test_rmse\n";
  for (const auto& row : rows) {
    csv += std::to_string(row.K);
    for (double x : {row.seconds_per_epoch, row.best_val_rmse, row.test_rmse}) {
      csv += ',';
      append_number(csv, x);
    }
    csv += '\n';
  }
  std::ofstream(out_dir / "sensitivity.csv", std::ios::binary) << csv;
  return rows;
}

BenchOptions bench_options_from_json(const nlohmann::json& j) {
  return guarded("bench options", [&] {
    BenchOptions o;
    if (j.contains("schemes")) {
      o.schemes.clear();
      for (const auto& s : j.at("schemes")) o.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    read_field(j, "seeds", o.seeds);
    read_field(j, "unroll_K", o.unroll_K);
    read_field(j, "implicit_tol", o.implicit_tol);
    return o;
  });
}

nlohmann::json run_bench(const RunConfig& config, const BenchOptions& options,
                         const std::filesystem::path& out_dir) {
  require(!options.schemes.empty() && !options.seeds.empty(), ErrorCode::kConfigError,
          "bench: need at least one scheme and one seed");
  const auto program = make_program(config);
  std::vector<std::filesystem::path> dirs;
  for (std::uint64_t seed : options.seeds) {
    RunConfig base = config;
    base.seed = seed;
    const auto data = make_dataset(base, program);
    const nlohmann::json world =
        base.data_csv.empty() ? make_world(base)->describe() : nlohmann::json();
    for (Scheme scheme : options.schemes) {
      RunConfig c = base;
      c.scheme = scheme;
      if (scheme == Scheme::kRdflUnroll) c.K = options.unroll_K;
      if (scheme == Scheme::kRdflImplicit) c.tol = options.implicit_tol;
      auto r = train(c, program, data);
      r.world = world;
      const auto dir = out_dir / (std::string(to_string(scheme)) + "_seed" + std::to_string(seed));
      write_artifact(r, dir);
      dirs.push_back(dir);
    }
  }
  return emit_report(dirs, out_dir);
}

EquivalenceOptions equivalence_options_from_json(const nlohmann::json& j) {
  return guarded("equivalence options", [&] {
    EquivalenceOptions o;
    read_field(j, "K_list", o.K_list);
    read_field(j, "samples", o.samples);
    read_field(j, "checkpoint", o.checkpoint);
    return o;
  });
}

nlohmann::json run_equivalence(const RunConfig& config, const EquivalenceOptions& options,
                               const std::filesystem::path& out_dir) {
  const auto program = make_program(config);
  const auto data = make_dataset(config, program);
  const auto params =
      options.checkpoint.empty()
          ? make_predictor(config, program, data)
          : predictor::load_checkpoint(std::filesystem::path(options.checkpoint) / "checkpoint.bin",
                                       std::filesystem::path(options.checkpoint) / "checkpoint.json");
  const recursive::CoupledLayer layer(params, program);
  const auto audit = recursive::audit_fixed_point_options();

  nlohmann::json out;
  out["K_list"] = options.K_list;
  out["samples"] = nlohmann::json::array();
  const std::size_t count = std::min(options.samples, data.samples.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = data.samples[i];
    nlohmann::json entry{{"sample", i}};
    try {
      const auto eq = recursive::fixed_point_solve(layer, program.initial_point(), s.v, audit);
      recursive::require_converged(eq);
      const auto loss =
          problems::decision_loss(config.loss_mode, program, eq.x_star, s.c_true, s.x_oracle);
      const auto report = recursive::gradient_equivalence_report(
          layer, program.initial_point(), s.v, loss.grad_x, options.K_list, audit);
      entry["report"] = recursive::to_json(report);
    } catch (const Error& e) {
      entry["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    }
    out["samples"].push_back(std::move(entry));
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream(out_dir / "equivalence.json", std::ios::binary) << out.dump(2) << '\n';
  return out;
}

GradcheckSuiteOptions gradcheck_options_from_json(const nlohmann::json& j) {
  return guarded("gradcheck options", [&] {
    GradcheckSuiteOptions o;
    read_field(j, "instances", o.instances);
    read_field(j, "threshold", o.threshold);
    read_field(j, "K", o.K);
    read_field(j, "first_seed", o.first_seed);
    read_field(j, "max_attempts_factor", o.max_attempts_factor);
    return o;
  });
}

GradcheckSuiteResult run_gradcheck_suite(const GradcheckSuiteOptions& options,
                                         const FactoryWrapper& wrap) {
  GradcheckSuiteResult result;
  const std::size_t attempts = options.instances * std::max<std::size_t>(options.max_attempts_factor, 1);
  for (std::size_t a = 0; a < attempts && result.unroll_errors.size() < options.instances; ++a) {
    const auto inst = make_newsvendor_check_instance(options.first_seed + a);
    // rho_hat == 0: every decision sits on a bound, both gradients vanish
    if (!(inst.rho_hat < 1.0) || inst.rho_hat < 1e-8) {
      ++result.skipped_instances;
      continue;
    }
    const recursive::CoupledLayer layer(inst.params, inst.program);
    const auto trace = recursive::unroll_forward(layer, inst.x0, inst.v, options.K);
    std::vector<Vector> points(trace.x_seq.begin(), trace.x_seq.end() - 1);
    const auto eq = recursive::fixed_point_solve(layer, inst.x0, inst.v,
                                                 {.tol = 1e-10, .max_iter = 5000, .damping = 0.5});
    if (!eq.converged || !smooth_at_points(inst, points) || !smooth_at_points(inst, {eq.x_star})) {
      ++result.skipped_instances;
      continue;
    }

    LayerFactory factory = [&inst](const Vector& theta) {
      auto p = inst.params;
      p.assign(theta);
      return recursive::make_owned_coupled_layer(std::move(p), inst.program);
    };
    if (wrap) factory = wrap(factory);
    const Vector theta = inst.params.flatten();

    GradcheckOptions o;
    o.K = options.K;
    o.scheme = GradScheme::kUnroll;
    result.unroll_errors.push_back(
        check_gradient(factory, theta, inst.x0, inst.v, inst.loss_grad, o).max_rel_err);
    o.scheme = GradScheme::kImplicit;
    result.implicit_errors.push_back(
        check_gradient(factory, theta, inst.x0, inst.v, inst.loss_grad, o).max_rel_err);
  }
  for (double e : result.unroll_errors) result.max_unroll_error = std::max(result.max_unroll_error, e);
  for (double e : result.implicit_errors) {
    result.max_implicit_error = std::max(result.max_implicit_error, e);
  }
  result.passed = result.unroll_errors.size() == options.instances &&
                  result.max_unroll_error <= options.threshold &&
                  result.max_implicit_error <= options.threshold;
  return result;
}

nlohmann::json to_json(const GradcheckSuiteResult& r) {
  return {{"instances", r.unroll_errors.size()},
          {"skipped_instances", r.skipped_instances},
          {"max_unroll_rel_err", r.max_unroll_error},
          {"max_implicit_rel_err", r.max_implicit_error},
          {"unroll_rel_err", r.unroll_errors},
          {"implicit_rel_err", r.implicit_errors},
          {"passed", r.passed}};
}

}  // namespace rdfl::harness
