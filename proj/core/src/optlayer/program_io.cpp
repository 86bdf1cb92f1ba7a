#include "rdfl/optlayer/program_io.hpp"

#include <string>

#include "rdfl/error.hpp"

namespace rdfl::optlayer {

nlohmann::json spec_to_json(const ProgramSpec& spec) {
  if (const auto* nv = std::get_if<NewsvendorSpec>(&spec)) {
    return {{"tag", "newsvendor"},       {"n", nv->n},
            {"T1", nv->T1},              {"T2", nv->T2},
            {"s1", nv->s1.values()},     {"s2", nv->s2.values()},
            {"reg_eps", nv->reg_eps}};
  }
  const auto& mt = std::get<MatchingSpec>(spec);
  return {{"tag", "matching"}, {"players", mt.players}, {"S", mt.S}, {"reg_eps", mt.reg_eps}};
}

namespace {

// Per-coordinate bounds, or one number applied to every coordinate.
Vector bounds_from_json(const nlohmann::json& j, std::size_t n) {
  if (j.is_number()) return Vector(n, j.get<double>());
  return Vector(j.get<std::vector<double>>());
}

}  // namespace

ProgramSpec spec_from_json(const nlohmann::json& j) {
  try {
    const std::string tag = j.at("tag").get<std::string>();
    if (tag == "newsvendor") {
      NewsvendorSpec s;
      s.n = j.at("n").get<std::size_t>();
      s.T1 = j.at("T1").get<double>();
      s.T2 = j.at("T2").get<double>();
      s.s1 = bounds_from_json(j.at("s1"), s.n);
      s.s2 = bounds_from_json(j.at("s2"), s.n);
      s.reg_eps = j.value("reg_eps", s.reg_eps);
      if (s.s1.size() != s.n || s.s2.size() != s.n) {
        fail(ErrorCode::kDimensionMismatch, "program spec: s1/s2 length differs from n");
      }
      return s;
    }
    if (tag == "matching") {
      MatchingSpec s;
      s.players = j.at("players").get<std::size_t>();
      s.S = j.at("S").get<double>();
      s.reg_eps = j.value("reg_eps", s.reg_eps);
      return s;
    }
    fail(ErrorCode::kConfigError, "program spec: unknown tag '" + tag + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("program spec: ") + e.what());
  }
}

}  // namespace rdfl::optlayer
