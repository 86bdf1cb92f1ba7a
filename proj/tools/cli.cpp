#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "rdfl/error.hpp"
#include "rdfl/harness/report.hpp"
#include "rdfl/harness/train.hpp"
#include "rdfl/problems/dataset.hpp"

namespace rdfl::cli {

namespace {

namespace fs = std::filesystem;

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheme;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, "config " + path + ": " + e.what());
  }
}

harness::RunConfig run_config(const nlohmann::json& j, const Args& args) {
  nlohmann::json copy = j;
  if (args.seed) copy["seed"] = *args.seed;
  if (args.scheme) copy["scheme"] = *args.scheme;
  return harness::run_config_from_json(copy);
}

nlohmann::json section(const nlohmann::json& j, const char* key) {
  return j.value(key, nlohmann::json::object());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
}

int cmd_train(const Args& args, std::ostream& out) {
  const auto config = run_config(read_json(args.config), args);
  const auto result = harness::train(config);
  harness::write_artifact(result, args.out);
  out << nlohmann::json{{"scheme", harness::to_string(config.scheme)},
                        {"seed", config.seed},
                        {"best_epoch", result.best_epoch},
                        {"best_val_rmse", result.best_val_rmse},
                        {"test_rmse", result.test_rmse}}
             .dump()
      << '\n';
  return 0;
}

int cmd_gen_data(const Args& args, std::ostream& out) {
  const auto config = run_config(read_json(args.config), args);
  const auto program = harness::make_program(config);
  const auto data = harness::make_dataset(config, program);
  fs::create_directories(args.out);
  problems::write_dataset_csv(fs::path(args.out) / "data.csv", data);
  nlohmann::json info{{"samples", data.samples.size()},
                      {"train", data.split.train.size()},
                      {"validation", data.split.validation.size()},
                      {"test", data.split.test.size()},
                      {"clipped_prices", data.clipped_prices},
                      {"max_rho", data.max_rho},
                      {"config", harness::to_json(config)}};
  if (config.data_csv.empty()) info["world"] = harness::make_world(config)->describe();
  write_json(fs::path(args.out) / "dataset.json", info);
  out << info.dump() << '\n';
  return 0;
}

int cmd_sensitivity(const Args& args, std::ostream& out) {
  const auto j = read_json(args.config);
  const auto config = run_config(j, args);
  std::vector<std::size_t> K_list{5, 10, 15, 20, 25};
  try {
    const auto s = section(j, "sensitivity");
    if (s.contains("K_list")) K_list = s.at("K_list").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("sensitivity options: ") + e.what());
  }
  const auto rows = harness::run_sensitivity(config, K_list, args.out);
  for (const auto& r : rows) {
    out << nlohmann::json{{"K", r.K},
                          {"seconds_per_epoch", r.seconds_per_epoch},
                          {"test_rmse", r.test_rmse}}
               .dump()
        << '\n';
  }
  return 0;
}

int cmd_bench(const Args& args, std::ostream& out) {
  const auto j = read_json(args.config);
  const auto config = run_config(j, args);
  auto options = harness::bench_options_from_json(section(j, "bench"));
  if (args.seed) options.seeds = {*args.seed};
  if (args.scheme) options.schemes = {harness::scheme_from_string(*args.scheme)};
  out << harness::run_bench(config, options, args.out).dump() << '\n';
  return 0;
}

int cmd_equivalence(const Args& args, std::ostream& out) {
  const auto j = read_json(args.config);
  const auto config = run_config(j, args);
  const auto options = harness::equivalence_options_from_json(section(j, "equivalence"));
  const auto result = harness::run_equivalence(config, options, args.out);
  std::size_t errors = 0;
  for (const auto& s : result.at("samples")) errors += s.contains("error") ? 1 : 0;
  out << nlohmann::json{{"samples", result.at("samples").size()}, {"failed_samples", errors}}.dump()
      << '\n';
  return 0;
}

int cmd_report(const Args& args, std::ostream& out) {
  const auto j = read_json(args.config);
  std::vector<fs::path> dirs;
  try {
    for (const auto& p : j.at("artifacts")) dirs.emplace_back(p.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("report config: ") + e.what());
  }
  out << harness::emit_report(dirs, args.out).dump() << '\n';
  return 0;
}

void write_error(const nlohmann::json& error, const Args& args, std::ostream& err) {
  err << error.dump() << '\n';
  if (args.out.empty()) return;
  try {
    write_json(fs::path(args.out) / "error.json", error);
  } catch (...) {
    // the stderr copy is enough when the output directory is unusable
  }
}

nlohmann::json error_json(std::string_view subcommand, std::string_view code,
                          std::string_view message) {
  return {{"error", {{"subcommand", subcommand}, {"code", code}, {"message", message}}}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, const CliHooks& hooks) {
  std::ostream& out = hooks.out ? *hooks.out : std::cout;
  std::ostream& err = hooks.err ? *hooks.err : std::cerr;

  CLI::App app{"Recursive decision-focused learning experiments", "rdfl"};
  app.require_subcommand(1);
  Args args;
  std::uint64_t seed = 0;
  std::string scheme;

  const auto add = [&](const std::string& name, const std::string& help, bool run_flags) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory")->required();
    if (run_flags) {
      sub->add_option("--seed", seed, "overrides the config seed");
      sub->add_option("--scheme", scheme, "overrides the config scheme");
    }
    return sub;
  };
  add("train", "train one scheme and write its artifact", true);
  add("gen-data", "generate a dataset CSV from the world model", true);
  add("sensitivity", "unroll depth sweep", true);
  add("bench", "all schemes over several seeds, with report", true);
  add("equivalence", "unroll vs implicit gradient distance per depth", true);
  add("report", "comparison tables from existing artifacts", false);
  auto* gradcheck = add("gradcheck", "finite-difference audit of both gradient schemes", false);
  gradcheck->add_option("--seed", seed, "first check-instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json("", "UsageError", e.what()).dump() << '\n';
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const auto given = [sub](const char* flag) {
    const auto* opt = sub->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) args.seed = seed;
  if (given("--scheme")) args.scheme = scheme;

  try {
    if (name == "train") return cmd_train(args, out);
    if (name == "gen-data") return cmd_gen_data(args, out);
    if (name == "sensitivity") return cmd_sensitivity(args, out);
    if (name == "bench") return cmd_bench(args, out);
    if (name == "equivalence") return cmd_equivalence(args, out);
    if (name == "report") return cmd_report(args, out);

    auto options = harness::gradcheck_options_from_json(section(read_json(args.config), "gradcheck"));
    if (args.seed) options.first_seed = *args.seed;
    const auto result = harness::run_gradcheck_suite(options, hooks.gradcheck_wrapper);
    const auto j = harness::to_json(result);
    write_json(fs::path(args.out) / "gradcheck.json", j);
    out << j.dump() << '\n';
    if (result.passed) return 0;
    write_error(error_json(name, "GradientMismatch",
                           "largest relative error exceeds " + std::to_string(options.threshold) +
                               " or too few smooth instances"),
                args, err);
    return 1;
  } catch (const Error& e) {
    write_error(error_json(name, to_string(e.code()), e.what()), args, err);
  } catch (const std::exception& e) {
    write_error(error_json(name, "InternalError", e.what()), args, err);
  }
  return 1;
}

}  // namespace rdfl::cli
