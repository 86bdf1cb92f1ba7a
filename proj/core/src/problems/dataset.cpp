#include "rdfl/problems/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "rdfl/error.hpp"
#include "rdfl/numerics/linalg.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/optlayer/solver.hpp"
#include "rdfl/recursive/fixed_point.hpp"

namespace rdfl::problems {

Split make_split(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  numerics::Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::size_t n_train = count * 8 / 10;
  const std::size_t n_val = count / 10;
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

SampleInputs draw_sample_inputs(const WorldModel& world, std::uint64_t seed, std::size_t index) {
  auto rng = numerics::Rng::stream(seed, index);
  SampleInputs out;
  out.v = world.draw_features(rng);
  out.noise = world.draw_noise(rng);
  return out;
}

namespace {

// Spectral radius of the true loop at x_oracle. Where the solution is
// degenerate (weakly active constraints, singular KKT) the local Jacobian is
// undefined and the observed residual contraction over the last iterations
// stands in.
double loop_rho(const TrueLoopLayer& loop, const WorldModel& world, const Sample& s,
                const Vector& noise, const recursive::EquilibriumResult& eq) {
  if (norm_inf(world.response_slope(s.x_oracle, s.v, noise)) == 0.0) return 0.0;
  try {
    return numerics::spectral_radius_estimate(loop.linearize(s.x_oracle, s.v).jacobian).rho;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularKkt) throw;
  }
  const auto& h = eq.residual_history;
  double ratio = 0.0;
  const std::size_t first = h.size() > 6 ? h.size() - 6 : 1;
  for (std::size_t k = first; k < h.size(); ++k) {
    if (h[k - 1] > 0.0) ratio = std::max(ratio, h[k] / h[k - 1]);
  }
  return ratio;
}

}  // namespace

Dataset generate_dataset(const WorldModel& world, const optlayer::ConvexProgram& program,
                         std::size_t count, std::uint64_t seed) {
  require(world.n() == program.n(), ErrorCode::kDimensionMismatch,
          "dataset: world and program dimensions differ");
  recursive::FixedPointOptions fp;
  fp.tol = kGroundTruthTolerance;
  fp.max_iter = 10000;
  fp.damping = 1.0;
  fp.linearize_at_solution = false;

  Dataset out;
  out.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto inputs = draw_sample_inputs(world, seed, i);
    const Vector& noise = inputs.noise;
    Sample s;
    s.v = std::move(inputs.v);
    const TrueLoopLayer loop(world, program, noise);
    const auto eq = recursive::fixed_point_solve(loop, program.initial_point(), s.v, fp);
    s.c_true = world.response(eq.x_star, s.v, noise, &out.clipped_prices);
    s.x_oracle = optlayer::solve(program, s.c_true).x;
    const double rho = eq.converged ? loop_rho(loop, world, s, noise, eq) : eq.rho_hat;
    if (!eq.converged || !(rho < 1.0)) {
      fail(ErrorCode::kWorldModelDiverges,
           "dataset: true closed loop does not contract for sample " + std::to_string(i) +
               " (rho_hat " + std::to_string(rho) + ", residual " + std::to_string(eq.residual) +
               ")");
    }
    out.max_rho = std::max(out.max_rho, rho);
    out.samples.push_back(std::move(s));
  }
  out.split = make_split(count, seed);
  return out;
}

Dataset generate_newsvendor_dataset(std::size_t n, std::size_t d, std::size_t count,
                                    const NewsvendorWorld& world,
                                    const optlayer::ConvexProgram& program, std::uint64_t seed) {
  require(world.n() == n && world.d() == d, ErrorCode::kDimensionMismatch,
          "newsvendor dataset: world shape differs from (n, d)");
  return generate_dataset(world, program, count, seed);
}

Dataset generate_matching_dataset(std::size_t players, std::size_t d, std::size_t count,
                                  const MatchingWorld& world,
                                  const optlayer::ConvexProgram& program, std::uint64_t seed) {
  require(world.players() == players && world.d() == d, ErrorCode::kDimensionMismatch,
          "matching dataset: world shape differs from (players, d)");
  return generate_dataset(world, program, count, seed);
}

namespace {

void append_number(std::string& line, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  line.append(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void parse_error(std::size_t row, std::size_t col, const std::string& what) {
  fail(ErrorCode::kParseError,
       "dataset csv: row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + what);
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoError, "dataset csv: cannot open " + path.string() + " for writing");
  const std::size_t d = dataset.samples.empty() ? 0 : dataset.samples.front().v.size();
  const std::size_t n = dataset.samples.empty() ? 0 : dataset.samples.front().c_true.size();
  std::string line;
  for (std::size_t k = 0; k < d; ++k) line += (k ? ",v_" : "v_") + std::to_string(k);
  for (std::size_t k = 0; k < n; ++k) line += ",c_" + std::to_string(k);
  out << line << '\n';
  for (const auto& s : dataset.samples) {
    line.clear();
    for (std::size_t k = 0; k < s.v.size(); ++k) {
      if (k) line += ',';
      append_number(line, s.v[k]);
    }
    for (double c : s.c_true) {
      line += ',';
      append_number(line, c);
    }
    out << line << '\n';
  }
  if (!out) fail(ErrorCode::kIoError, "dataset csv: write failed for " + path.string());
}

Dataset load_dataset_csv(const std::filesystem::path& path, const optlayer::ConvexProgram& program,
                         std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "dataset csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) parse_error(1, 1, "missing header");
  const auto header = split_csv(line);
  std::size_t d = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string& h = header[k];
    const bool is_v = h.rfind("v_", 0) == 0;
    const bool is_c = h.rfind("c_", 0) == 0;
    if (is_v && n == 0) {
      ++d;
    } else if (is_c) {
      ++n;
    } else {
      parse_error(1, k + 1, "unexpected header '" + h + "'");
    }
  }
  if (n != program.n()) {
    fail(ErrorCode::kDimensionMismatch, "dataset csv: " + std::to_string(n) +
                                            " cost columns, program has n = " +
                                            std::to_string(program.n()));
  }

  Dataset out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != d + n) {
      parse_error(row, std::min(cells.size(), d + n) + 1,
                  "expected " + std::to_string(d + n) + " fields, got " +
                      std::to_string(cells.size()));
    }
    Vector values(d + n);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string& cell = cells[k];
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      const auto res = std::from_chars(first, last, values[k]);
      if (res.ec != std::errc() || res.ptr != last || cell.empty()) {
        parse_error(row, k + 1, "not a number: '" + cell + "'");
      }
    }
    Sample s;
    s.v = slice(values, 0, d);
    s.c_true = slice(values, d, n);
    s.x_oracle = optlayer::solve(program, s.c_true).x;
    out.samples.push_back(std::move(s));
  }
  out.split = make_split(out.samples.size(), seed);
  return out;
}

}  // namespace rdfl::problems
