#include "rdfl/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rdfl/error.hpp"

namespace rdfl::harness {

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "report: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kParseError, "report: bad number '" + s + "' in " + path.string());
  }
  return v;
}

void append_number(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

ArtifactSummary read_artifact(const std::filesystem::path& dir) {
  ArtifactSummary a;
  nlohmann::json summary;
  {
    std::ifstream in(dir / "summary.json");
    if (!in) fail(ErrorCode::kIoError, "report: no summary.json in " + dir.string());
    try {
      in >> summary;
      a.scheme = summary.at("scheme").get<std::string>();
      a.seed = summary.at("seed").get<std::uint64_t>();
      a.best_val_rmse = summary.at("best_val_rmse").get<double>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParseError, "report: " + (dir / "summary.json").string() + ": " + e.what());
    }
  }
  a.label = a.scheme + "_seed" + std::to_string(a.seed);

  const auto metrics_path = dir / "metrics.csv";
  const auto metrics = read_csv_rows(metrics_path);
  a.final_val_rmse = metrics.empty() ? a.best_val_rmse : to_double(metrics.back().at(2), metrics_path);

  const auto timing_path = dir / "timing.csv";
  const auto timing = read_csv_rows(timing_path);
  for (const auto& row : timing) a.seconds_per_epoch += to_double(row.at(1), timing_path);
  if (!timing.empty()) a.seconds_per_epoch /= static_cast<double>(timing.size());

  const auto decisions_path = dir / "test_decisions.csv";
  double sq = 0.0;
  for (const auto& row : read_csv_rows(decisions_path)) {
    const double x = to_double(row.at(2), decisions_path);
    const double o = to_double(row.at(3), decisions_path);
    a.decisions.push_back(x);
    a.oracles.push_back(o);
    sq += (x - o) * (x - o);
  }
  a.test_rmse = a.decisions.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(a.decisions.size()));
  return a;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

nlohmann::json emit_report(const std::vector<std::filesystem::path>& artifacts,
                           const std::filesystem::path& out_dir) {
  require(!artifacts.empty(), ErrorCode::kInvalidArgument, "report: need at least one artifact");
  std::vector<ArtifactSummary> runs;
  std::map<std::string, int> seen;
  for (const auto& dir : artifacts) {
    runs.push_back(read_artifact(dir));
    const int count = ++seen[runs.back().label];
    if (count > 1) runs.back().label += "_" + std::to_string(count);
  }
  std::filesystem::create_directories(out_dir);

  std::string table = "label,scheme,seed,test_rmse,best_val_rmse,final_val_rmse,seconds_per_epoch\n";
  for (const auto& r : runs) {
    table += r.label + ',' + r.scheme + ',' + std::to_string(r.seed);
    for (double x : {r.test_rmse, r.best_val_rmse, r.final_val_rmse, r.seconds_per_epoch}) {
      table += ',';
      append_number(table, x);
    }
    table += '\n';
  }
  std::ofstream(out_dir / "report_table.csv", std::ios::binary) << table;

  std::string qq = "quantile";
  std::vector<std::vector<double>> columns;
  for (const auto& r : runs) {
    qq += ',' + r.label;
    columns.push_back(r.decisions);
  }
  if (!runs.empty()) {
    qq += ",oracle";
    columns.push_back(runs.front().oracles);
  }
  qq += '\n';
  for (auto& c : columns) std::sort(c.begin(), c.end());
  for (int k = 1; k <= 99; ++k) {
    const double q = k / 100.0;
    append_number(qq, q);
    for (const auto& c : columns) {
      qq += ',';
      append_number(qq, sorted_quantile(c, q));
    }
    qq += '\n';
  }
  std::ofstream(out_dir / "qq_quantiles.csv", std::ios::binary) << qq;

  std::map<std::string, std::vector<const ArtifactSummary*>> by_scheme;
  for (const auto& r : runs) by_scheme[r.scheme].push_back(&r);
  nlohmann::json report;
  report["artifacts"] = runs.size();
  for (const auto& [scheme, list] : by_scheme) {
    std::vector<double> rmse, secs;
    for (const auto* r : list) {
      rmse.push_back(r->test_rmse);
      secs.push_back(r->seconds_per_epoch);
    }
    report["schemes"][scheme] = {{"runs", list.size()},
                                 {"median_test_rmse", median(rmse)},
                                 {"median_seconds_per_epoch", median(secs)}};
  }
  std::ofstream(out_dir / "report.json", std::ios::binary) << report.dump(2) << '\n';
  return report;
}

}  // namespace rdfl::harness
