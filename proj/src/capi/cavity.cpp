#include "cavity/cavity.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "config.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "study.hpp"

struct cav_problem {
  cavity::config::ProblemConfig config;
};

struct cav_solution {
  cavity::analysis::SolveOutcome outcome;
};

struct cav_profile {
  cavity::config::ProblemConfig config;
  cavity::oracle::CheckedProfile checked;
};

namespace {

thread_local std::string last_error;
thread_local int last_error_line = 0;

cav_status fail(cav_status status, const std::string& message, int line = 0) {
  last_error = message;
  last_error_line = line;
  return status;
}

// Maps exceptions escaping the core onto status codes.
template <class F>
cav_status guarded(F&& body) {
  try {
    return body();
  } catch (const cavity::config::ConfigError& e) {
    return fail(CAV_ERR_CONFIG, e.what(), e.line());
  } catch (const nlohmann::json::exception& e) {
    return fail(CAV_ERR_CONFIG, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CAV_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CAV_ERR_IO, e.what());
  } catch (const std::domain_error& e) {
    return fail(CAV_ERR_NUMERICAL, e.what());
  } catch (const std::runtime_error& e) {
    return fail(CAV_ERR_NUMERICAL, e.what());
  } catch (const std::exception& e) {
    return fail(CAV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CAV_ERR_INTERNAL, "unknown exception");
  }
}

char* duplicate(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cav_status null_argument(const char* name) {
  return fail(CAV_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* cav_version(void) { return "1.0.0"; }

const char* cav_status_string(cav_status status) {
  switch (status) {
    case CAV_OK: return "ok";
    case CAV_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CAV_ERR_CONFIG: return "configuration error";
    case CAV_ERR_IO: return "i/o error";
    case CAV_ERR_NUMERICAL: return "numerical failure";
    case CAV_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cav_last_error(void) { return last_error.c_str(); }
int cav_last_error_line(void) { return last_error_line; }
void cav_free_string(char* s) { delete[] s; }

cav_status cav_problem_parse(const char* json_text, cav_problem** out) {
  if (!json_text) return null_argument("json_text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new cav_problem{cavity::config::parse_config(json_text)};
    return CAV_OK;
  });
}

cav_status cav_problem_load(const char* path, cav_problem** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  std::string text;
  try {
    text = cavity::io::read_file(path);
  } catch (const std::exception& e) {
    return fail(CAV_ERR_IO, e.what());
  }
  return cav_problem_parse(text.c_str(), out);
}

cav_status cav_problem_default(cav_problem** out) {
  if (!out) return null_argument("out");
  *out = new cav_problem{};
  return CAV_OK;
}

cav_status cav_problem_override(cav_problem* problem, const char* assignment) {
  if (!problem) return null_argument("problem");
  if (!assignment) return null_argument("assignment");
  return guarded([&] {
    cavity::config::apply_override(problem->config, assignment);
    return CAV_OK;
  });
}

cav_status cav_problem_to_json(const cav_problem* problem, char** out_json) {
  if (!problem) return null_argument("problem");
  if (!out_json) return null_argument("out_json");
  return guarded([&] {
    *out_json = duplicate(cavity::config::to_json(problem->config).dump(2));
    return CAV_OK;
  });
}

int cav_problem_is_symmetric(const cav_problem* problem) {
  return problem && problem->config.symmetric() ? 1 : 0;
}

int cav_problem_has_study(const cav_problem* problem) {
  return problem && problem->config.study ? 1 : 0;
}

void cav_problem_free(cav_problem* problem) { delete problem; }

cav_status cav_solve(const cav_problem* problem, const cav_solution* warm, cav_solution** out) {
  if (!problem) return null_argument("problem");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const cavity::assembly::UnknownVector* seed = warm ? &warm->outcome.report.y : nullptr;
    *out = new cav_solution{cavity::analysis::run_problem(problem->config, seed)};
    return CAV_OK;
  });
}

int cav_solution_converged(const cav_solution* solution) {
  return solution && solution->outcome.report.success() ? 1 : 0;
}

cav_status cav_solution_summary(const cav_solution* solution, cav_summary* out) {
  if (!solution) return null_argument("solution");
  if (!out) return null_argument("out");
  const cavity::solver::SolveReport& r = solution->outcome.report;
  out->converged = r.success() ? 1 : 0;
  out->energy = r.energy;
  out->energy_resolved = r.energy_resolved;
  out->residual_norm = r.residual_norm;
  out->min_D = r.min_D;
  out->min_D_fine = r.min_D_fine;
  out->semi_major = solution->outcome.metrics.semi_major;
  out->semi_minor = solution->outcome.metrics.semi_minor;
  out->gradient_iterations = r.gradient_iterations;
  out->quasi_newton_iterations = r.quasi_newton_iterations;
  out->evaluations = r.evaluations;
  out->restarts = r.restarts;
  out->broyden_skips = r.broyden_skips;
  out->wall_seconds = r.wall_seconds;
  return CAV_OK;
}

cav_status cav_solution_report_json(const cav_solution* solution, char** out_json) {
  if (!solution) return null_argument("solution");
  if (!out_json) return null_argument("out_json");
  return guarded([&] {
    *out_json = duplicate(cavity::io::report_json(solution->outcome).dump(2));
    return CAV_OK;
  });
}

cav_status cav_solution_snapshot_json(const cav_solution* solution, char** out_json) {
  if (!solution) return null_argument("solution");
  if (!out_json) return null_argument("out_json");
  return guarded([&] {
    *out_json = duplicate(
        cavity::io::snapshot_json(solution->outcome.config, solution->outcome.report.y).dump(2));
    return CAV_OK;
  });
}

cav_status cav_solution_coefficients(const cav_solution* solution, const double** data,
                                     size_t* count) {
  if (!solution) return null_argument("solution");
  if (!data || !count) return null_argument("data/count");
  *data = solution->outcome.report.y.data();
  *count = static_cast<size_t>(solution->outcome.report.y.size());
  return CAV_OK;
}

cav_status cav_solution_cavity_radius(const cav_solution* solution, double phi, double* out) {
  if (!solution) return null_argument("solution");
  if (!out) return null_argument("out");
  *out = cavity::spectral::eval_field(solution->outcome.field, -1.0, phi).P;
  return CAV_OK;
}

cav_status cav_solution_write(const cav_solution* solution, const char* out_dir, const char* stem) {
  if (!solution) return null_argument("solution");
  if (!out_dir || !stem) return null_argument("out_dir/stem");
  return guarded([&] {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const cavity::analysis::SolveOutcome& o = solution->outcome;
    cavity::io::write_file_atomic(dir / (std::string(stem) + "_snapshot.json"),
                                  cavity::io::snapshot_json(o.config, o.report.y).dump(2) + "\n");
    std::ostringstream history;
    cavity::io::write_history_csv(history, o.report.history);
    cavity::io::write_file_atomic(dir / (std::string(stem) + "_history.csv"), history.str());
    cavity::io::write_file_atomic(dir / (std::string(stem) + "_report.json"),
                                  cavity::io::report_json(o).dump(2) + "\n");
    return CAV_OK;
  });
}

void cav_solution_free(cav_solution* solution) { delete solution; }

cav_status cav_snapshot_energy(const char* snapshot_json, double* energy, double* energy_resolved) {
  if (!snapshot_json) return null_argument("snapshot_json");
  return guarded([&] {
    const cavity::io::Snapshot s = cavity::io::parse_snapshot(snapshot_json);
    const cavity::assembly::Discretization disc = cavity::config::make_discretization(s.config);
    if (energy) *energy = disc.evaluate(s.y, false).energy.value;
    if (energy_resolved) *energy_resolved = cavity::assembly::resolved_energy(disc, s.y);
    return CAV_OK;
  });
}

cav_status cav_oracle_radial(const cav_problem* problem, cav_profile** out) {
  if (!problem) return null_argument("problem");
  if (!out) return null_argument("out");
  *out = nullptr;
  const cavity::config::ProblemConfig& c = problem->config;
  if (!c.symmetric()) {
    return fail(CAV_ERR_INVALID_ARGUMENT, "oracle is radial only: lambda1 and lambda2 differ");
  }
  return guarded([&] {
    auto checked = cavity::oracle::radial_reference_checked(
        c.eps, c.gamma, c.lambda1, cavity::config::make_material(c.material), c.oracle_grid);
    *out = new cav_profile{c, std::move(checked)};
    return CAV_OK;
  });
}

double cav_profile_energy(const cav_profile* profile) {
  return profile ? profile->checked.profile.energy : 0.0;
}

double cav_profile_cavity_radius(const cav_profile* profile) {
  return profile ? profile->checked.profile.cavity_radius : 0.0;
}

cav_status cav_profile_summary_json(const cav_profile* profile, char** out_json) {
  if (!profile) return null_argument("profile");
  if (!out_json) return null_argument("out_json");
  return guarded([&] {
    *out_json = duplicate(cavity::io::oracle_summary(profile->config, profile->checked).dump(2));
    return CAV_OK;
  });
}

cav_status cav_profile_write(const cav_profile* profile, const char* out_dir, const char* stem) {
  if (!profile) return null_argument("profile");
  if (!out_dir || !stem) return null_argument("out_dir/stem");
  return guarded([&] {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::ostringstream csv;
    cavity::io::write_profile_csv(csv, profile->checked.profile);
    cavity::io::write_file_atomic(dir / (std::string(stem) + "_profile.csv"), csv.str());
    cavity::io::write_file_atomic(
        dir / (std::string(stem) + "_summary.json"),
        cavity::io::oracle_summary(profile->config, profile->checked).dump(2) + "\n");
    return CAV_OK;
  });
}

void cav_profile_free(cav_profile* profile) { delete profile; }

cav_status cav_fit(const int* N, const int* M, const double* q, size_t count, cav_fit_result* out) {
  if (!N || !M || !q) return null_argument("N/M/q");
  if (!out) return null_argument("out");
  return guarded([&] {
    std::vector<cavity::analysis::ConvergenceSample> samples;
    for (size_t i = 0; i < count; ++i) samples.push_back({N[i], M[i], q[i]});
    const cavity::analysis::RegressedModel m = cavity::analysis::fit_convergence(samples);
    *out = {m.q_inf, m.c1, m.c2, m.nu1, m.nu2, m.residual_norm, m.reduced ? 1 : 0,
            m.degenerate ? 1 : 0};
    return CAV_OK;
  });
}

cav_status cav_fit_csv(const char* csv_text, char** out_json) {
  if (!csv_text) return null_argument("csv_text");
  if (!out_json) return null_argument("out_json");
  return guarded([&] {
    const auto samples = cavity::io::parse_samples_csv(csv_text);
    nlohmann::json j = cavity::io::fit_json(cavity::analysis::fit_convergence(samples));
    j["samples"] = samples.size();
    *out_json = duplicate(j.dump(2));
    return CAV_OK;
  });
}

cav_status cav_interp_min_slope(double eps, double gamma, double lambda, int M, double* out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = cavity::analysis::interpolation_min_slope(eps, gamma, lambda, M);
    return CAV_OK;
  });
}

cav_status cav_study_run(const cav_problem* problem, const char* out_dir, int threads,
                         char** summary_json, int* all_ok) {
  if (!problem) return null_argument("problem");
  if (!out_dir) return null_argument("out_dir");
  return guarded([&] {
    const cavity::analysis::StudyResult r =
        cavity::analysis::run_study(problem->config, out_dir, threads);
    if (summary_json) *summary_json = duplicate(r.summary.dump(2));
    if (all_ok) *all_ok = r.all_ok ? 1 : 0;
    return CAV_OK;
  });
}

}  // extern "C"
