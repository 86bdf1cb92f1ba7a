#include "rdfl/numerics/random.hpp"

namespace rdfl::numerics {

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9U};
  std::mt19937_64 engine(seq);
  return Rng(engine());
}

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

Vector Rng::uniform_vector(std::size_t n, double lo, double hi) {
  Vector v(n);
  for (double& x : v) x = uniform(lo, hi);
  return v;
}

Vector Rng::normal_vector(std::size_t n, double stddev) {
  Vector v(n);
  for (double& x : v) x = normal(0.0, stddev);
  return v;
}

Matrix Rng::uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (double& x : m.row(i)) x = uniform(lo, hi);
  return m;
}

}  // namespace rdfl::numerics
