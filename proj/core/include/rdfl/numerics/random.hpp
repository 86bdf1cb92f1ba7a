#pragma once

#include <cstdint>
#include <random>

#include "rdfl/numerics/matrix.hpp"

namespace rdfl::numerics {

/// Seeded random stream. All randomness in the library goes through this type
/// so that runs are reproducible from (seed, stream) pairs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Independent stream for item `index` of a computation seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double stddev = 1.0);
  std::uint64_t next() { return engine_(); }

  Vector uniform_vector(std::size_t n, double lo, double hi);
  Vector normal_vector(std::size_t n, double stddev = 1.0);
  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rdfl::numerics
