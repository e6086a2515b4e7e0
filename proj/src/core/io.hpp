#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "config.hpp"
#include "oracle.hpp"
#include "solver.hpp"

namespace cavity::io {

/// Coefficient snapshot: the resolved config as header plus the free
/// coefficients in packing order under "y".
[[nodiscard]] nlohmann::json snapshot_json(const config::ProblemConfig& config,
                                           const assembly::UnknownVector& y);

struct Snapshot {
  config::ProblemConfig config;
  assembly::UnknownVector y;
};

/// Throws config::ConfigError for a bad header and std::invalid_argument when
/// the coefficient count does not match N and M.
[[nodiscard]] Snapshot parse_snapshot(const std::string& text);

/// Report of one solve with the resolved config embedded.
[[nodiscard]] nlohmann::json report_json(const analysis::SolveOutcome& outcome);

/// iteration,phase,t,energy,residual_norm,min_D,tol,accepted
void write_history_csv(std::ostream& out, const std::vector<solver::HistoryEntry>& history);

/// r,s
void write_profile_csv(std::ostream& out, const oracle::RadialProfile& profile);
[[nodiscard]] nlohmann::json oracle_summary(const config::ProblemConfig& config,
                                            const oracle::CheckedProfile& checked);

[[nodiscard]] nlohmann::json fit_json(const analysis::RegressedModel& model);

/// Whitespace-separated table with '#' comment lines, for plotting tools.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
void write_table(std::ostream& out, const Table& table);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Reads a whole file; throws std::runtime_error if it cannot be opened.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Parses N,M,q rows (header line optional, '#' comments skipped).
[[nodiscard]] std::vector<analysis::ConvergenceSample> parse_samples_csv(const std::string& text);

}  // namespace cavity::io
