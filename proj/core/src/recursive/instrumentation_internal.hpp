#pragma once

namespace rdfl::recursive::detail {

void count_fixed_point_solve() noexcept;
void count_deep_unroll() noexcept;

}  // namespace rdfl::recursive::detail
