#include "io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cavity::io {

using nlohmann::json;

namespace {

// JSON has no NaN/inf; non-finite values become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json snapshot_json(const config::ProblemConfig& config, const assembly::UnknownVector& y) {
  json problem = config::to_json(config);
  problem.erase("study");
  return {{"format", "cavity-snapshot/1"},
          {"packing", "alpha,beta,xi,eta blocks; mode k major, Chebyshev degree j=1..M minor"},
          {"problem", problem},
          {"y", std::vector<double>(y.data(), y.data() + y.size())}};
}

Snapshot parse_snapshot(const std::string& text) {
  const json j = json::parse(text);
  if (!j.contains("problem") || !j.contains("y")) {
    throw std::invalid_argument("snapshot needs 'problem' and 'y'");
  }
  Snapshot s;
  s.config = config::parse_config(j.at("problem").dump());
  const std::vector<double> y = j.at("y").get<std::vector<double>>();
  const assembly::Layout layout(s.config.N, s.config.M);
  if (static_cast<int>(y.size()) != layout.size()) {
    throw std::invalid_argument("snapshot has " + std::to_string(y.size()) +
                                " coefficients, expected " + std::to_string(layout.size()));
  }
  s.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return s;
}

json report_json(const analysis::SolveOutcome& outcome) {
  const solver::SolveReport& r = outcome.report;
  json events = json::array();
  for (const std::string& e : r.events) events.push_back(e);
  json config = config::to_json(outcome.config);
  return {{"converged", r.success()},
          {"outcome", solver::to_string(r.outcome)},
          {"initial_energy", number(r.initial_energy)},
          {"initial_residual_norm", number(r.initial_residual_norm)},
          {"residual_norm", number(r.residual_norm)},
          {"energy", number(r.energy)},
          {"energy_resolved", number(r.energy_resolved)},
          {"min_D", number(r.min_D)},
          {"min_D_fine", number(r.min_D_fine)},
          {"gradient_iterations", r.gradient_iterations},
          {"quasi_newton_iterations", r.quasi_newton_iterations},
          {"evaluations", r.evaluations},
          {"restarts", r.restarts},
          {"broyden_skips", r.broyden_skips},
          {"wall_seconds", r.wall_seconds},
          {"warm_started", outcome.warm_started},
          {"seed_polish",
           {{"applied", outcome.polish.applied},
            {"iterations", outcome.polish.iterations},
            {"residual_before", number(outcome.polish.residual_before)},
            {"residual_after", number(outcome.polish.residual_after)},
            {"wall_seconds", outcome.polish.wall_seconds}}},
          {"cavity",
           {{"semi_major", number(outcome.metrics.semi_major)},
            {"semi_minor", number(outcome.metrics.semi_minor)},
            {"phi_major", number(outcome.metrics.phi_major)},
            {"phi_minor", number(outcome.metrics.phi_minor)},
            {"radius", number(outcome.metrics.radius())}}},
          {"events", events},
          {"config", config}};
}

void write_history_csv(std::ostream& out, const std::vector<solver::HistoryEntry>& history) {
  out << "iteration,phase,t,energy,residual_norm,min_D,tol,accepted\n";
  out << std::setprecision(17);
  for (const solver::HistoryEntry& h : history) {
    out << h.iteration << ',' << solver::to_string(h.phase) << ',' << h.t << ',' << h.energy << ','
        << h.residual_norm << ',' << h.min_D << ',' << h.tol << ',' << (h.accepted ? 1 : 0) << '\n';
  }
}

void write_profile_csv(std::ostream& out, const oracle::RadialProfile& profile) {
  out << "r,s\n" << std::setprecision(17);
  for (std::size_t i = 0; i < profile.r_grid.size(); ++i) {
    out << profile.r_grid[i] << ',' << profile.s_values[i] << '\n';
  }
}

json oracle_summary(const config::ProblemConfig& config, const oracle::CheckedProfile& checked) {
  const oracle::RadialProfile& p = checked.profile;
  return {{"eps", config.eps},
          {"gamma", config.gamma},
          {"lambda", config.lambda1},
          {"energy", p.energy},
          {"cavity_radius", p.cavity_radius},
          {"n_grid", p.n_grid},
          {"residual_norm", p.residual_norm},
          {"newton_iterations", p.newton_iterations},
          {"energy_change_on_doubling", checked.energy_change},
          {"radius_change_on_doubling", checked.radius_change}};
}

json fit_json(const analysis::RegressedModel& m) {
  return {{"q_inf", m.q_inf}, {"c1", m.c1},
          {"c2", m.c2},       {"nu1", m.nu1},
          {"nu2", m.nu2},     {"residual_norm", m.residual_norm},
          {"reduced", m.reduced}, {"degenerate", m.degenerate}};
}

void write_table(std::ostream& out, const Table& table) {
  for (const std::string& c : table.comments) out << "# " << c << '\n';
  out << '#';
  for (const std::string& c : table.columns) out << ' ' << c;
  out << '\n' << std::setprecision(12);
  for (const std::vector<double>& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      if (std::isfinite(row[i])) {
        out << row[i];
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<analysis::ConvergenceSample> parse_samples_csv(const std::string& text) {
  std::vector<analysis::ConvergenceSample> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& c : line) {
      if (c == ',' || c == ';') c = ' ';
    }
    std::istringstream fields(line);
    double n = 0.0, m = 0.0, q = 0.0;
    if (!(fields >> n >> m >> q)) {
      if (out.empty() && line.find_first_of("0123456789") == std::string::npos) continue;  // header
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected N,M,q");
    }
    if (n != std::floor(n) || m != std::floor(m)) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": N and M must be integers");
    }
    out.push_back({static_cast<int>(n), static_cast<int>(m), q});
  }
  return out;
}

}  // namespace cavity::io
