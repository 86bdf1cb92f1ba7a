#include "rdfl/recursive/instrumentation.hpp"

#include <atomic>

#include "instrumentation_internal.hpp"

namespace rdfl::recursive {

namespace {
std::atomic<std::uint64_t> g_fixed_point{0};
std::atomic<std::uint64_t> g_deep_unroll{0};
}  // namespace

CallCounts call_counts() noexcept {
  return {g_fixed_point.load(std::memory_order_relaxed), g_deep_unroll.load(std::memory_order_relaxed)};
}

void reset_call_counts() noexcept {
  g_fixed_point.store(0, std::memory_order_relaxed);
  g_deep_unroll.store(0, std::memory_order_relaxed);
}

namespace detail {
void count_fixed_point_solve() noexcept { g_fixed_point.fetch_add(1, std::memory_order_relaxed); }
void count_deep_unroll() noexcept { g_deep_unroll.fetch_add(1, std::memory_order_relaxed); }
}  // namespace detail

}  // namespace rdfl::recursive
