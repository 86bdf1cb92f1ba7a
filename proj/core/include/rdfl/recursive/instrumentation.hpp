#pragma once

#include <cstdint>

namespace rdfl::recursive {

/// Process-wide call counters, used to check that baseline schemes never run
/// the loop machinery.
struct CallCounts {
  std::uint64_t fixed_point_solves = 0;
  std::uint64_t deep_unrolls = 0;  // unroll_forward with K > 1
};

CallCounts call_counts() noexcept;
void reset_call_counts() noexcept;

}  // namespace rdfl::recursive
