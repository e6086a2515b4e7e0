// Command-line front end. Talks to the solver only through the C API.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavity/cavity.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::string out;
  std::string samples;
  int threads = 1;
  std::vector<std::string> overrides;
  bool quiet = false;
};

std::string default_out_dir() {
  const char* env = std::getenv("CAVITY_OUT_DIR");
  return env && *env ? env : ".";
}

// Usage-class statuses exit 2; numerical and i/o trouble exits 1.
int report(cav_status status) {
  const int line = cav_last_error_line();
  if (line > 0) {
    std::fprintf(stderr, "error: %s\n", cav_last_error());
  } else {
    std::fprintf(stderr, "error: %s: %s\n", cav_status_string(status), cav_last_error());
  }
  return status == CAV_ERR_CONFIG || status == CAV_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
}

struct Problem {
  cav_problem* handle = nullptr;
  ~Problem() { cav_problem_free(handle); }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { cav_free_string(s); }
};

cav_status load_problem(const Options& opt, Problem& problem) {
  cav_status st = cav_problem_load(opt.config.c_str(), &problem.handle);
  if (st != CAV_OK) return st;
  for (const std::string& o : opt.overrides) {
    st = cav_problem_override(problem.handle, o.c_str());
    if (st != CAV_OK) return st;
  }
  return CAV_OK;
}

std::string stem_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const std::size_t dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name.resize(dot);
  return name.empty() ? "run" : name;
}

int cmd_solve(const Options& opt) {
  Problem problem;
  if (cav_status st = load_problem(opt, problem); st != CAV_OK) return report(st);
  cav_solution* solution = nullptr;
  if (cav_status st = cav_solve(problem.handle, nullptr, &solution); st != CAV_OK) return report(st);
  const std::string stem = stem_of(opt.config);
  cav_status st = cav_solution_write(solution, opt.out.c_str(), stem.c_str());
  cav_summary s{};
  cav_solution_summary(solution, &s);
  cav_solution_free(solution);
  if (st != CAV_OK) return report(st);
  if (!opt.quiet) {
    std::printf("%s  |f|=%.3e  E=%.10f  E_resolved=%.10f  minD=%.4e\n",
                s.converged ? "converged" : "NOT converged", s.residual_norm, s.energy,
                s.energy_resolved, s.min_D);
    std::printf("cavity semi-axes %.10f %.10f  (gradient %ld, quasi-Newton %ld, restarts %d, %.1f s)\n",
                s.semi_major, s.semi_minor, s.gradient_iterations, s.quasi_newton_iterations,
                s.restarts, s.wall_seconds);
    std::printf("wrote %s/%s_{snapshot.json,history.csv,report.json}\n", opt.out.c_str(), stem.c_str());
  }
  return s.converged ? kExitOk : kExitFailure;
}

int cmd_oracle(const Options& opt) {
  Problem problem;
  if (cav_status st = load_problem(opt, problem); st != CAV_OK) return report(st);
  cav_profile* profile = nullptr;
  if (cav_status st = cav_oracle_radial(problem.handle, &profile); st != CAV_OK) return report(st);
  const std::string stem = stem_of(opt.config);
  const cav_status st = cav_profile_write(profile, opt.out.c_str(), stem.c_str());
  if (!opt.quiet && st == CAV_OK) {
    std::printf("energy %.10f  cavity radius %.10f\n", cav_profile_energy(profile),
                cav_profile_cavity_radius(profile));
  }
  cav_profile_free(profile);
  return st == CAV_OK ? kExitOk : report(st);
}

int cmd_study(const Options& opt) {
  Problem problem;
  if (cav_status st = load_problem(opt, problem); st != CAV_OK) return report(st);
  if (!cav_problem_has_study(problem.handle)) {
    std::fprintf(stderr, "error: config has no \"study\" section\n");
    return kExitUsage;
  }
  int all_ok = 0;
  OwnedString summary;
  const cav_status st =
      cav_study_run(problem.handle, opt.out.c_str(), opt.threads, &summary.s, &all_ok);
  if (st != CAV_OK) return report(st);
  if (!opt.quiet) std::printf("%s\n", summary.s);
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_fit(const Options& opt) {
  std::FILE* f = std::fopen(opt.samples.c_str(), "rb");
  if (!f) {
    std::fprintf(stderr, "error: cannot open %s\n", opt.samples.c_str());
    return kExitUsage;
  }
  std::string text;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, n);
  std::fclose(f);
  OwnedString json;
  if (cav_status st = cav_fit_csv(text.c_str(), &json.s); st != CAV_OK) return report(st);
  std::printf("%s\n", json.s);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver for cavitation in a nonlinear elastic annulus"};
  app.require_subcommand(1);
  Options opt;
  opt.out = default_out_dir();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "problem configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory (default: $CAVITY_OUT_DIR or .)");
    sub->add_option("--override", opt.overrides, "KEY=VALUE, applied after loading; repeatable");
    sub->add_flag("--quiet", opt.quiet, "suppress the summary on stdout");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve one problem; exit 0 iff converged");
  add_common(solve);
  CLI::App* oracle = app.add_subcommand("oracle", "1-D radial reference solution");
  add_common(oracle);
  CLI::App* study = app.add_subcommand("study", "run the config's study section");
  add_common(study);
  study->add_option("--threads", opt.threads, "workers for independent rows")
      ->check(CLI::PositiveNumber);
  CLI::App* fit = app.add_subcommand("fit", "fit q ~ q_inf + c1 N^-nu1 + c2 M^-nu2 to N,M,q CSV");
  fit->add_option("samples", opt.samples, "CSV with columns N,M,q")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (solve->parsed()) return cmd_solve(opt);
  if (oracle->parsed()) return cmd_oracle(opt);
  if (study->parsed()) return cmd_study(opt);
  return cmd_fit(opt);
}
