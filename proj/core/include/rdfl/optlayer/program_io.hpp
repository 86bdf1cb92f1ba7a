#pragma once

#include <nlohmann/json.hpp>

#include "rdfl/optlayer/program.hpp"

namespace rdfl::optlayer {

// {"tag": "newsvendor", "n", "T1", "T2", "s1", "s2", "reg_eps"}; s1 and s2 are arrays of
// length n or a single number for every coordinate.
// {"tag": "matching", "players", "S", "reg_eps"}
nlohmann::json spec_to_json(const ProgramSpec& spec);
ProgramSpec spec_from_json(const nlohmann::json& j);

}  // namespace rdfl::optlayer
