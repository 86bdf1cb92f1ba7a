#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rdfl/numerics/matrix.hpp"
#include "rdfl/optlayer/program.hpp"
#include "rdfl/problems/world.hpp"

namespace rdfl::problems {

struct Sample {
  Vector v;
  Vector c_true;
  Vector x_oracle;  // solve(program, c_true).x
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<Sample> samples;
  Split split;
  std::size_t clipped_prices = 0;
  double max_rho = 0.0;  // largest loop contraction estimate seen during generation
};

/// Seeded shuffle, then floor(0.8N) train, floor(0.1N) validation, rest test.
Split make_split(std::size_t count, std::uint64_t seed);

struct SampleInputs {
  Vector v;
  Vector noise;
};

/// Features and noise of sample `index`, drawn from stream (seed, index).
SampleInputs draw_sample_inputs(const WorldModel& world, std::uint64_t seed, std::size_t index);

/// Closed-loop tolerance for ground truth.
inline constexpr double kGroundTruthTolerance = 1e-8;

/// Per sample: features and noise from stream (seed, index); equilibrium of
/// the true loop from the program's initial point; c_true is the response at
/// that equilibrium and x_oracle the solve under c_true. Throws
/// Error{kWorldModelDiverges} when the loop does not contract.
Dataset generate_dataset(const WorldModel& world, const optlayer::ConvexProgram& program,
                         std::size_t count, std::uint64_t seed);

Dataset generate_newsvendor_dataset(std::size_t n, std::size_t d, std::size_t count,
                                    const NewsvendorWorld& world,
                                    const optlayer::ConvexProgram& program, std::uint64_t seed);
Dataset generate_matching_dataset(std::size_t players, std::size_t d, std::size_t count,
                                  const MatchingWorld& world,
                                  const optlayer::ConvexProgram& program, std::uint64_t seed);

/// Header `v_0..v_{d−1},c_0..c_{n−1}`, one sample per line, shortest
/// round-trip decimal formatting.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

/// Parses the CSV, recomputes x_oracle per row and applies make_split(seed).
/// Errors: kParseError naming row and column; kDimensionMismatch when the
/// c columns do not match the program.
Dataset load_dataset_csv(const std::filesystem::path& path,
                         const optlayer::ConvexProgram& program, std::uint64_t seed);

}  // namespace rdfl::problems
