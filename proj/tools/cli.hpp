#pragma once

#include <iosfwd>

#include "rdfl/harness/experiments.hpp"

namespace rdfl::cli {

struct CliHooks {
  /// Applied to every layer factory the gradcheck subcommand builds.
  harness::FactoryWrapper gradcheck_wrapper;
  std::ostream* out = nullptr;  // defaults to std::cout
  std::ostream* err = nullptr;  // defaults to std::cerr
};

/// Exit codes: 0 success, 1 run failure (error JSON on err and in
/// <out>/error.json when --out is known), 2 bad command line.
int run_cli(int argc, const char* const* argv, const CliHooks& hooks = {});

}  // namespace rdfl::cli
