#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdfl/numerics/matrix.hpp"

namespace rdfl::harness {

/// What emit_report reads back from one training artifact directory.
struct ArtifactSummary {
  std::string label;  // scheme_seed<seed>, suffixed when repeated
  std::string scheme;
  std::uint64_t seed = 0;
  double test_rmse = 0.0;         // recomputed from test_decisions.csv
  double best_val_rmse = 0.0;
  double final_val_rmse = 0.0;    // last row of metrics.csv
  double seconds_per_epoch = 0.0; // mean of timing.csv
  std::vector<double> decisions;  // test decisions, flattened
  std::vector<double> oracles;
};

ArtifactSummary read_artifact(const std::filesystem::path& dir);

/// Linear-interpolated quantile of sorted values at level q in [0, 1].
double sorted_quantile(const std::vector<double>& sorted, double q);

/// Writes report_table.csv (one row per artifact), qq_quantiles.csv (sorted
/// test-decision quantiles per artifact plus the oracle) and report.json
/// (per-scheme medians). Returns the JSON summary. Needs at least one artifact.
nlohmann::json emit_report(const std::vector<std::filesystem::path>& artifacts,
                           const std::filesystem::path& out_dir);

}  // namespace rdfl::harness
