#include "rdfl/harness/config.hpp"

#include <fstream>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/optlayer/program_io.hpp"

namespace rdfl::harness {

namespace {

constexpr std::pair<Scheme, std::string_view> kSchemeNames[] = {
    {Scheme::kRdflUnroll, "rdfl_unroll"},
    {Scheme::kRdflImplicit, "rdfl_implicit"},
    {Scheme::kSdfl, "sdfl"},
    {Scheme::kPto, "pto"},
};

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(Scheme scheme) noexcept {
  for (const auto& [s, name] : kSchemeNames) {
    if (s == scheme) return name;
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
  for (const auto& [s, n] : kSchemeNames) {
    if (n == name) return s;
  }
  fail(ErrorCode::kConfigError, "unknown scheme '" + std::string(name) + "'");
}

bool RunConfig::is_matching() const noexcept {
  return std::holds_alternative<optlayer::MatchingSpec>(program);
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (!j.contains("seed")) fail(ErrorCode::kConfigError, "run config: 'seed' is required");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.program = j.contains("program") ? optlayer::spec_from_json(j.at("program"))
                                      : optlayer::ProgramSpec(default_newsvendor_spec(10));
    const nlohmann::json world = j.value("world", nlohmann::json::object());
    if (c.is_matching()) {
      c.matching_world = problems::matching_world_from_json(world);
    } else {
      c.newsvendor_world = problems::newsvendor_world_from_json(world);
    }
    read_field(j, "features", c.features);
    read_field(j, "samples", c.samples);
    read_field(j, "data_csv", c.data_csv);
    read_field(j, "data_seed", c.data_seed);
    if (j.contains("scheme")) c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    read_field(j, "K", c.K);
    read_field(j, "tol", c.tol);
    read_field(j, "damping", c.damping);
    read_field(j, "max_fp_iter", c.max_fp_iter);
    read_field(j, "epochs", c.epochs);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "lr", c.lr);
    read_field(j, "weight_decay", c.weight_decay);
    if (j.contains("loss_mode")) {
      c.loss_mode = problems::loss_mode_from_string(j.at("loss_mode").get<std::string>());
    }
    read_field(j, "hidden", c.hidden);
    read_field(j, "max_skip_fraction", c.max_skip_fraction);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("run config: ") + e.what());
  }
  if (c.is_matching()) c.features = 5 * std::get<optlayer::MatchingSpec>(c.program).players;
  if (c.batch_size == 0) fail(ErrorCode::kConfigError, "run config: batch_size must be positive");
  if (c.scheme == Scheme::kRdflUnroll && c.K == 0) {
    fail(ErrorCode::kConfigError, "run config: rdfl_unroll needs K >= 1");
  }
  if (!(c.tol > 0.0) || !(c.damping > 0.0 && c.damping <= 1.0)) {
    fail(ErrorCode::kConfigError, "run config: need tol > 0 and damping in (0, 1]");
  }
  if (c.features == 0) fail(ErrorCode::kConfigError, "run config: features must be positive");
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["program"] = optlayer::spec_to_json(c.program);
  j["world"] = c.is_matching() ? problems::to_json(c.matching_world)
                               : problems::to_json(c.newsvendor_world);
  j["features"] = c.features;
  j["samples"] = c.samples;
  if (!c.data_csv.empty()) j["data_csv"] = c.data_csv;
  j["data_seed"] = c.data_seed;
  j["scheme"] = std::string(to_string(c.scheme));
  j["K"] = c.K;
  j["tol"] = c.tol;
  j["damping"] = c.damping;
  j["max_fp_iter"] = c.max_fp_iter;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["loss_mode"] = std::string(problems::to_string(c.loss_mode));
  j["hidden"] = c.hidden;
  j["max_skip_fraction"] = c.max_skip_fraction;
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, "config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

optlayer::NewsvendorSpec default_newsvendor_spec(std::size_t n, double capacity, double reg_eps) {
  optlayer::NewsvendorSpec s;
  s.n = n;
  s.T1 = 0.3 * static_cast<double>(n) * capacity;
  s.T2 = 0.7 * static_cast<double>(n) * capacity;
  s.s1 = Vector(n, 0.0);
  s.s2 = Vector(n, capacity);
  s.reg_eps = reg_eps;
  return s;
}

optlayer::MatchingSpec default_matching_spec(std::size_t players, double reg_eps) {
  return {players, 0.5 * static_cast<double>(players), reg_eps};
}

std::unique_ptr<problems::WorldModel> make_world(const RunConfig& config) {
  if (config.is_matching()) {
    const auto& spec = std::get<optlayer::MatchingSpec>(config.program);
    return std::make_unique<problems::MatchingWorld>(spec.players, config.matching_world);
  }
  const auto& spec = std::get<optlayer::NewsvendorSpec>(config.program);
  return std::make_unique<problems::NewsvendorWorld>(spec.n, config.features,
                                                     config.newsvendor_world);
}

}  // namespace rdfl::harness
