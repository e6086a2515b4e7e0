#include "study.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "analysis.hpp"
#include "io.hpp"
#include "oracle.hpp"

namespace cavity::analysis {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Row {
  config::ProblemConfig config;
  bool ok = false;
  std::string failure;
  json report;
  double energy = kNaN;
  double energy_resolved = kNaN;
  double residual_norm = kNaN;
  double semi_major = kNaN;
  double semi_minor = kNaN;
};

Row solve_row(const config::ProblemConfig& cfg, const assembly::UnknownVector* warm,
              assembly::UnknownVector* y_out = nullptr) {
  Row row;
  row.config = cfg;
  try {
    const SolveOutcome s = run_problem(cfg, warm);
    row.ok = s.report.success();
    if (!row.ok) row.failure = solver::to_string(s.report.outcome);
    row.report = io::report_json(s);
    row.energy = s.report.energy;
    row.energy_resolved = s.report.energy_resolved;
    row.residual_norm = s.report.residual_norm;
    row.semi_major = s.metrics.semi_major;
    row.semi_minor = s.metrics.semi_minor;
    if (y_out) *y_out = s.report.y;
  } catch (const std::exception& e) {
    row.failure = e.what();
    row.report = {{"error", e.what()}, {"config", config::to_json(cfg)}};
  }
  return row;
}

// Runs jobs[i]() for every i on up to `threads` workers.
void run_parallel(std::vector<std::function<void()>>& jobs, int threads) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) jobs[i]();
  };
  std::vector<std::jthread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
}

std::vector<Row> solve_all(const std::vector<config::ProblemConfig>& configs, int threads) {
  std::vector<Row> rows(configs.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    jobs.emplace_back([&, i] { rows[i] = solve_row(configs[i], nullptr); });
  }
  run_parallel(jobs, threads);
  return rows;
}

std::vector<Row> solve_warm(const std::vector<config::ProblemConfig>& configs) {
  std::vector<Row> rows;
  std::optional<assembly::UnknownVector> warm;
  for (const config::ProblemConfig& cfg : configs) {
    assembly::UnknownVector y;
    rows.push_back(solve_row(cfg, warm ? &*warm : nullptr, &y));
    if (y.size() > 0) warm = std::move(y);
  }
  return rows;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

struct Reference {
  bool available = false;
  std::string source;
  double energy = kNaN;
  double radius = kNaN;
};

Reference radial_reference_for(const config::ProblemConfig& cfg) {
  Reference ref;
  if (!cfg.symmetric()) return ref;
  const oracle::RadialProfile p = oracle::radial_reference(
      cfg.eps, cfg.gamma, cfg.lambda1, config::make_material(cfg.material), cfg.oracle_grid);
  ref.available = true;
  ref.source = "radial oracle";
  ref.energy = p.energy;
  ref.radius = p.cavity_radius;
  return ref;
}

json fit_or_error(const std::vector<ConvergenceSample>& samples) {
  try {
    return io::fit_json(fit_convergence(samples));
  } catch (const std::exception& e) {
    return {{"error", e.what()}};
  }
}

config::ProblemConfig point_config(const config::ProblemConfig& base) {
  config::ProblemConfig cfg = base;
  cfg.study.reset();
  return cfg;
}

}  // namespace

StudyResult run_study(const config::ProblemConfig& base, const std::filesystem::path& out_dir,
                      int threads) {
  if (!base.study) throw config::ConfigError("study", 0, "config has no study section");
  const config::StudyConfig& study = *base.study;
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path rows_dir = out_dir / (study.name + "_rows");
  std::filesystem::create_directories(rows_dir);

  StudyResult result;
  json summary = {{"study", config::to_json(study)}, {"base", config::to_json(point_config(base))}};
  io::Table table;
  std::vector<Row> rows;

  const double q_ratio_N = base.Nq > 0 ? double(base.Nq) / base.N : 2.0;
  const double q_ratio_M = base.Mq > 0 ? double(base.Mq) / base.M : 8.0;
  auto with_resolution = [&](config::ProblemConfig cfg, int N, int M) {
    cfg.N = N;
    cfg.M = M;
    cfg.Nq = static_cast<int>(std::lround(q_ratio_N * N));
    cfg.Mq = static_cast<int>(std::lround(q_ratio_M * M));
    return cfg;
  };

  if (study.kind == "M" || study.kind == "N") {
    std::vector<config::ProblemConfig> configs;
    for (double v : study.values) {
      const int n = static_cast<int>(v);
      configs.push_back(study.kind == "M" ? with_resolution(point_config(base), base.N, n)
                                          : with_resolution(point_config(base), n, base.M));
    }
    rows = solve_all(configs, threads);
    const Reference ref = radial_reference_for(base);
    table.comments = {"convergence in " + study.kind + ", eps=" + format_double(base.eps) +
                      " gamma=" + format_double(base.gamma) + " lambda1=" +
                      format_double(base.lambda1) + " lambda2=" + format_double(base.lambda2)};
    table.columns = {"N", "M", "energy_resolved", "energy_quadrature", "semi_major", "semi_minor",
                     "residual_norm", "energy_error", "radius_error"};
    std::vector<ConvergenceSample> e_samples, major_samples, minor_samples;
    for (const Row& r : rows) {
      const double e_err = ref.available ? std::abs(r.energy_resolved - ref.energy) : kNaN;
      const double r_err = ref.available ? std::abs(r.semi_major - ref.radius) : kNaN;
      table.rows.push_back({double(r.config.N), double(r.config.M), r.energy_resolved, r.energy,
                            r.semi_major, r.semi_minor, r.residual_norm, e_err, r_err});
      if (std::isfinite(r.energy_resolved)) {
        e_samples.push_back({r.config.N, r.config.M, r.energy_resolved});
        major_samples.push_back({r.config.N, r.config.M, r.semi_major});
        minor_samples.push_back({r.config.N, r.config.M, r.semi_minor});
      }
    }
    if (ref.available) {
      summary["reference"] = {{"source", ref.source}, {"energy", ref.energy}, {"radius", ref.radius}};
    }
    summary["fit"] = {{"energy", fit_or_error(e_samples)},
                      {"semi_major", fit_or_error(major_samples)},
                      {"semi_minor", fit_or_error(minor_samples)}};
  } else if (study.kind == "Nq_ratio" || study.kind == "Mq_ratio") {
    std::vector<config::ProblemConfig> configs;
    for (double v : study.values) {
      config::ProblemConfig cfg = point_config(base);
      if (study.kind == "Nq_ratio") {
        cfg.Nq = std::max(cfg.N, static_cast<int>(std::lround(v * cfg.N)));
      } else {
        cfg.Mq = std::max(cfg.M, static_cast<int>(std::lround(v * cfg.M)));
      }
      configs.push_back(cfg);
    }
    rows = solve_all(configs, threads);
    Reference ref = radial_reference_for(base);
    if (!ref.available && !rows.empty()) {
      // Non-symmetric: compare against the most finely integrated run.
      std::size_t finest = 0;
      for (std::size_t i = 1; i < study.values.size(); ++i) {
        if (study.values[i] > study.values[finest]) finest = i;
      }
      ref.available = rows[finest].ok;
      ref.source = "finest quadrature row";
      ref.radius = rows[finest].semi_major;
      ref.energy = rows[finest].energy_resolved;
      summary["reference_minor"] = rows[finest].semi_minor;
    }
    table.comments = {"quadrature ratio study (" + study.kind + ")",
                      "reference: " + (ref.available ? ref.source : std::string("none"))};
    table.columns = {"ratio", "Nq", "Mq", "semi_major", "semi_minor", "major_error", "minor_error",
                     "energy_resolved"};
    const double minor_ref = summary.contains("reference_minor")
                                 ? summary["reference_minor"].get<double>()
                                 : ref.radius;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      table.rows.push_back({study.values[i], double(r.config.angular_nodes()),
                            double(r.config.radial_max_index()), r.semi_major, r.semi_minor,
                            ref.available ? std::abs(r.semi_major - ref.radius) : kNaN,
                            ref.available ? std::abs(r.semi_minor - minor_ref) : kNaN,
                            r.energy_resolved});
    }
    if (ref.available) summary["reference"] = {{"source", ref.source}, {"radius", ref.radius}};
  } else if (study.kind == "lambda" || study.kind == "lambda1") {
    std::vector<config::ProblemConfig> configs;
    for (double v : study.values) {
      config::ProblemConfig cfg = point_config(base);
      cfg.lambda1 = v;
      cfg.lambda2 = study.kind == "lambda" ? v : v / study.ratio;
      configs.push_back(cfg);
    }
    rows = study.warm_start ? solve_warm(configs) : solve_all(configs, threads);
    table.comments = {"stretch sweep, eps=" + format_double(base.eps) +
                      " gamma=" + format_double(base.gamma) +
                      (study.kind == "lambda1" ? " lambda1/lambda2=" + format_double(study.ratio)
                                               : std::string(" symmetric"))};
    table.columns = {"lambda1", "lambda2", "semi_major", "semi_minor", "energy_resolved",
                     "residual_norm"};
    std::vector<double> majors, minors;
    for (const Row& r : rows) {
      table.rows.push_back({r.config.lambda1, r.config.lambda2, r.semi_major, r.semi_minor,
                            r.energy_resolved, r.residual_norm});
      majors.push_back(r.semi_major);
      minors.push_back(r.semi_minor);
    }
    summary["semi_major_increasing"] = strictly_increasing(majors);
    summary["semi_minor_increasing"] = strictly_increasing(minors);
  } else if (study.kind == "domains") {
    std::vector<config::ProblemConfig> configs;
    for (const auto& d : study.domains) {
      for (int m : study.M_values) {
        config::ProblemConfig cfg = point_config(base);
        cfg.eps = d[0];
        cfg.gamma = d[1];
        cfg.lambda1 = study.lambda_gamma / d[1];
        cfg.lambda2 = (study.lambda2_gamma > 0.0 ? study.lambda2_gamma : study.lambda_gamma) / d[1];
        configs.push_back(with_resolution(cfg, base.N, m));
      }
    }
    rows = solve_all(configs, threads);
    table.comments = {"subdomain study, lambda*gamma=" + format_double(study.lambda_gamma)};
    table.columns = {"eps", "gamma", "M", "energy_resolved", "semi_major", "semi_minor",
                     "energy_error", "major_error", "minor_error"};
    json refs = json::array();
    const std::size_t per_domain = study.M_values.size();
    for (std::size_t d = 0; d < study.domains.size(); ++d) {
      const config::ProblemConfig& first = configs[d * per_domain];
      Reference ref = radial_reference_for(first);
      double minor_ref = ref.radius;
      if (!ref.available) {
        std::size_t finest = 0;
        for (std::size_t i = 1; i < per_domain; ++i) {
          if (study.M_values[i] > study.M_values[finest]) finest = i;
        }
        const Row& f = rows[d * per_domain + finest];
        ref.available = f.ok;
        ref.source = "largest M row";
        ref.energy = f.energy_resolved;
        ref.radius = f.semi_major;
        minor_ref = f.semi_minor;
      }
      refs.push_back({{"eps", first.eps}, {"gamma", first.gamma}, {"source", ref.source},
                      {"energy", ref.energy}, {"semi_major", ref.radius}, {"semi_minor", minor_ref}});
      for (std::size_t i = 0; i < per_domain; ++i) {
        const Row& r = rows[d * per_domain + i];
        table.rows.push_back({r.config.eps, r.config.gamma, double(r.config.M), r.energy_resolved,
                              r.semi_major, r.semi_minor, std::abs(r.energy_resolved - ref.energy),
                              std::abs(r.semi_major - ref.radius),
                              std::abs(r.semi_minor - minor_ref)});
      }
    }
    summary["references"] = refs;
  } else if (study.kind == "interp") {
    table.comments = {"minimum of the rho-derivative of the interpolated incompressible profile",
                      "lambda*gamma=" + format_double(study.lambda_gamma)};
    table.columns = {"eps", "gamma", "M", "min_slope"};
    json points = json::array();
    for (const auto& d : study.domains) {
      for (int m : study.M_values) {
        const double slope = interpolation_min_slope(d[0], d[1], study.lambda_gamma / d[1], m);
        table.rows.push_back({d[0], d[1], double(m), slope});
        points.push_back({{"eps", d[0]}, {"gamma", d[1]}, {"M", m}, {"min_slope", slope},
                          {"orientation_preserving", slope > 0.0}});
      }
    }
    summary["points"] = points;
  }

  bool all_ok = true;
  json row_summary = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    all_ok = all_ok && r.ok;
    json entry = {{"index", i}, {"ok", r.ok}};
    if (!r.failure.empty()) entry["failure"] = r.failure;
    row_summary.push_back(entry);
    std::ostringstream name;
    name << "row_" << std::setw(3) << std::setfill('0') << i << ".json";
    const std::filesystem::path path = rows_dir / name.str();
    io::write_file_atomic(path, r.report.dump(2) + "\n");
    result.files.push_back(path);
  }
  summary["rows"] = row_summary;
  summary["all_ok"] = all_ok;

  std::ostringstream dat;
  io::write_table(dat, table);
  const std::filesystem::path dat_path = out_dir / (study.name + ".dat");
  io::write_file_atomic(dat_path, dat.str());
  result.files.push_back(dat_path);
  const std::filesystem::path json_path = out_dir / (study.name + ".json");
  io::write_file_atomic(json_path, summary.dump(2) + "\n");
  result.files.push_back(json_path);

  result.summary = std::move(summary);
  result.all_ok = all_ok;
  return result;
}

}  // namespace cavity::analysis
