// Acceptance checks: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--strict] [criterion ...]
// Without criterion numbers all ten run. The exit status is 0 once every
// selected criterion has been evaluated; with --strict it is 1 when any of
// them failed. Exceptions escaping a criterion count as a failure of that
// criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "assembly.hpp"
#include "config.hpp"
#include "fixtures.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "run_checks.hpp"
#include "solver.hpp"
#include "spectral.hpp"

using namespace cavity;

namespace {

constexpr double kRadialEnergy3 = 18.61960090;
constexpr double kRadialRadius3 = 1.26772534;
constexpr double kRadialEnergy4 = 18.87582146;
constexpr double kRadialRadius4 = 1.25228643;
constexpr double kOvalEnergy = 22.85959048;
constexpr double kOvalMajor = 1.67481624;
constexpr double kOvalMinor = 1.42872097;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

/// Solves shared between criteria are computed once.
class Runs {
 public:
  const analysis::SolveOutcome& get(const std::string& key, const std::string& json) {
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, analysis::run_problem(config::parse_config(json))).first;
    }
    return it->second;
  }
  [[nodiscard]] const std::map<std::string, analysis::SolveOutcome>& all() const { return cache_; }

 private:
  std::map<std::string, analysis::SolveOutcome> cache_;
};

const std::string kRadial3 = R"({"eps": 1e-3, "gamma": 1, "lambda": 2, "N": 16, "M": 32, "Nq": 32, "Mq": 256})";
const std::string kRadial4 = R"({"eps": 1e-4, "gamma": 1, "lambda": 2, "N": 16, "M": 32})";
const std::string kOval4 =
    R"({"eps": 1e-4, "gamma": 1, "lambda1": 2.4, "lambda2": 2, "N": 16, "M": 32,
        "solver": {"max_outer_iterations": 4000}})";

std::string run_line(const analysis::SolveOutcome& o) {
  return fmt("%s, ||f|| %.2e, %.1f s", solver::to_string(o.report.outcome), o.report.residual_norm,
             o.report.wall_seconds + o.polish.wall_seconds);
}

// Largest coefficient that a radially symmetric field must not carry.
double non_symmetric_magnitude(const spectral::SpectralField& f) {
  double m = 0.0;
  for (const Eigen::MatrixXd* block : {&f.beta, &f.xi, &f.eta}) {
    if (block->size() > 0) m = std::max(m, block->cwiseAbs().maxCoeff());
  }
  if (f.alpha.rows() > 1) m = std::max(m, f.alpha.bottomRows(f.alpha.rows() - 1).cwiseAbs().maxCoeff());
  return m;
}

Verdict criterion_1(Runs& runs) {
  const analysis::SolveOutcome& o = runs.get("radial3", kRadial3);
  const double err = std::abs(o.report.energy_resolved - kRadialEnergy3);
  const double seconds = o.report.wall_seconds + o.polish.wall_seconds;
  return {o.report.success() && err <= 1e-5 && seconds < 300.0,
          fmt("E = %.10f, |E - %.8f| = %.2e (tol 1e-5); discrete E = %.10f; %s", o.report.energy_resolved,
              kRadialEnergy3, err, o.report.energy, run_line(o).c_str())};
}

Verdict criterion_2(Runs& runs) {
  const analysis::SolveOutcome& o = runs.get("radial3", kRadial3);
  const double R = o.metrics.radius();
  const double err = std::abs(R - kRadialRadius3);
  return {o.report.success() && err <= 1e-4,
          fmt("R = %.10f, |R - %.8f| = %.2e (tol 1e-4)", R, kRadialRadius3, err)};
}

Verdict criterion_3(Runs& runs) {
  const analysis::SolveOutcome& o = runs.get("radial4", kRadial4);
  const double e_err = std::abs(o.report.energy_resolved - kRadialEnergy4);
  const double r_err = std::abs(o.metrics.radius() - kRadialRadius4);
  const bool tight = e_err <= 5e-4 && r_err <= 5e-4;
  const bool relaxed = e_err <= 2e-3 && r_err <= 2e-3;
  return {o.report.success() && relaxed,
          fmt("E = %.10f (err %.2e), R = %.10f (err %.2e); %s bound; %s", o.report.energy_resolved, e_err,
              o.metrics.radius(), r_err, tight ? "5e-4" : (relaxed ? "relaxed 2e-3" : "no"),
              run_line(o).c_str())};
}

Verdict criterion_4() {
  bool pass = true;
  std::string detail = "eps 1e-2:";
  for (int M : {6, 8, 10, 12, 14}) {
    const double v = analysis::interpolation_min_slope(1e-2, 1.0, 2.0, M);
    pass = pass && std::abs(v / 2.86e-3 - 1.0) <= 0.02;
    detail += fmt(" M%d %.4e", M, v);
  }
  const double v = analysis::interpolation_min_slope(1e-4, 1.0, 2.0, 4);
  pass = pass && v < 0.0 && std::abs(v / -1.75e-4 - 1.0) <= 0.05;
  detail += fmt("; eps 1e-4 M4 %.4e (2%% and 5%% bands)", v);
  return {pass, detail};
}

// Ridders' extrapolation of the central difference (f(h) - f(-h)) / 2h.
// Returns the estimate with the smallest internal error estimate, or NaN
// when the first probe is not finite.
std::pair<double, double> ridders(const std::function<double(double)>& f, double h) {
  constexpr double kCon = 1.4;
  constexpr double kCon2 = kCon * kCon;
  constexpr int kTable = 10;
  double a[kTable][kTable];
  double err = std::numeric_limits<double>::infinity();
  double ans = std::numeric_limits<double>::quiet_NaN();
  a[0][0] = (f(h) - f(-h)) / (2.0 * h);
  if (!std::isfinite(a[0][0])) return {ans, err};
  for (int i = 1; i < kTable; ++i) {
    h /= kCon;
    a[0][i] = (f(h) - f(-h)) / (2.0 * h);
    if (!std::isfinite(a[0][i])) break;
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        ans = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= 2.0 * err) break;
  }
  return {ans, err};
}

Verdict criterion_5() {
  const assembly::Discretization disc = fixtures::make_disc(0.05, 1.0, 2.3, 2.0, 8, 4);
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const assembly::UnknownVector y = fixtures::random_admissible(disc, rng, 0.02);
    const Eigen::VectorXd g = disc.evaluate(y).residual;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      auto energy = [&](double s) {
        assembly::UnknownVector z = y;
        z[i] += s;
        return assembly::discrete_energy(disc, z).value;
      };
      double best = std::numeric_limits<double>::quiet_NaN();
      double best_err = std::numeric_limits<double>::infinity();
      for (double h0 : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const auto [v, e] = ridders(energy, h0 * std::max(1.0, std::abs(y[i])));
        if (std::isfinite(v) && e < best_err) {
          best = v;
          best_err = e;
        }
      }
      const double rel = std::abs(best - g[i]) / std::abs(g[i]);
      worst = std::isfinite(rel) ? std::max(worst, rel) : std::numeric_limits<double>::infinity();
    }
  }
  return {worst <= 1e-6,
          fmt("eps 0.05, stretch (2.3, 2), N 8, M 4, 10 states x 64 components: max relative error %.2e "
              "(tol 1e-6)",
              worst)};
}

Verdict criterion_6() {
  const config::ProblemConfig defaults = config::parse_config("{}");
  const model::MaterialModel mat = model::default_material();
  bool pass = true;
  std::string detail;
  const struct {
    double eps, energy, radius;
  } rows[] = {{1e-3, kRadialEnergy3, kRadialRadius3}, {1e-4, kRadialEnergy4, kRadialRadius4}};
  for (const auto& row : rows) {
    try {
      const oracle::CheckedProfile c =
          oracle::radial_reference_checked(row.eps, 1.0, 2.0, mat, defaults.oracle_grid, 1e-9);
      const double de = std::abs(c.profile.energy - row.energy);
      const double dr = std::abs(c.profile.cavity_radius - row.radius);
      pass = pass && c.energy_change <= 1e-9 && de <= 1e-7 && dr <= 1e-7;
      detail += fmt("eps %.0e: E %.10f (diff %.2e), R %.10f (diff %.2e), doubling change %.1e; ", row.eps,
                    c.profile.energy, de, c.profile.cavity_radius, dr, c.energy_change);
    } catch (const std::exception& e) {
      pass = false;
      detail += fmt("eps %.0e: %s; ", row.eps, e.what());
    }
  }
  detail += "tol 1e-7";
  return {pass, detail};
}

Verdict criterion_7(Runs& runs) {
  const analysis::SolveOutcome& o = runs.get("oval4", kOval4);
  const double de = std::abs(o.report.energy_resolved - kOvalEnergy);
  const double da = std::abs(o.metrics.semi_major - kOvalMajor);
  const double db = std::abs(o.metrics.semi_minor - kOvalMinor);
  return {o.report.success() && de <= 2e-3 && da <= 2e-3 && db <= 2e-3,
          fmt("E %.8f (discrete %.8f, diff %.2e), semi-axes %.8f / %.8f (diffs %.2e / %.2e), tol 2e-3; %s",
              o.report.energy_resolved, o.report.energy, de, o.metrics.semi_major, o.metrics.semi_minor, da,
              db, run_line(o).c_str())};
}

Verdict criterion_8(Runs& runs) {
  // Noise-free synthetic data.
  const double q_inf = 18.6, c1 = -40.0, nu1 = 3.5, c2 = 250.0, nu2 = 2.5;
  std::vector<analysis::ConvergenceSample> synthetic;
  for (int N : {8, 10, 12, 14, 16, 20}) {
    for (int M : {8, 12, 16, 20, 24, 28, 32}) {
      synthetic.push_back({N, M, q_inf + c1 * std::pow(N, -nu1) + c2 * std::pow(M, -nu2)});
    }
  }
  const analysis::RegressedModel s = analysis::fit_convergence(synthetic);
  auto within = [](double got, double want) { return std::abs(got / want - 1.0) <= 0.01; };
  const bool synthetic_ok = within(s.q_inf, q_inf) && within(s.c1, c1) && within(s.c2, c2) &&
                            within(s.nu1, nu1) && within(s.nu2, nu2);

  std::vector<analysis::ConvergenceSample> sweep;
  bool all_converged = true;
  for (int M : {8, 12, 16, 20, 24, 28, 32}) {
    const std::string json = fmt(R"({"eps": 1e-3, "lambda": 2, "N": 16, "M": %d})", M);
    const analysis::SolveOutcome& o = runs.get("radial3_M" + std::to_string(M), json);
    all_converged = all_converged && o.report.success();
    sweep.push_back({16, M, o.report.energy_resolved});
  }
  const analysis::RegressedModel e = analysis::fit_convergence(sweep);
  const double err = std::abs(e.q_inf - kRadialEnergy3);
  return {synthetic_ok && all_converged && err <= 1e-6,
          fmt("synthetic fit q_inf %.6f c1 %.4f c2 %.4f nu1 %.4f nu2 %.4f (1%%); energy sweep M 8..32: "
              "q_inf %.10f, diff %.2e (tol 1e-6), nu2 %.2f",
              s.q_inf, s.c1, s.c2, s.nu1, s.nu2, e.q_inf, err, e.nu2)};
}

Verdict criterion_9(Runs& runs) {
  std::vector<std::string> failures;
  auto require = [&failures](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // Gauss-Chebyshev exactness up to degree 2M'+1 for M' = 256.
  {
    const int Mq = 256;
    const spectral::QuadratureRule rule = spectral::gauss_chebyshev_rule(Mq);
    double worst = 0.0;
    for (int k = 0; k <= 2 * Mq + 1; ++k) {
      double sum = 0.0;
      for (int m = 0; m <= Mq; ++m) sum += rule.chebyshev_weights[m] * std::cos(k * std::acos(rule.chebyshev_nodes[m]));
      worst = std::max(worst, std::abs(sum - (k == 0 ? std::numbers::pi : 0.0)));
    }
    require(worst <= 1e-12, fmt("quadrature exactness error %.1e", worst));
  }

  // Interpolation is a projection: interpolating its own grid values gives it back.
  {
    std::mt19937 rng(9);
    std::normal_distribution<double> normal;
    const int N = 16, M = 32;
    spectral::SampleGrid P(M + 1, N), Q(M + 1, N);
    for (Eigen::Index i = 0; i < P.size(); ++i) {
      P.data()[i] = normal(rng);
      Q.data()[i] = normal(rng);
    }
    const spectral::SpectralField f = spectral::interpolate(P, Q, N, M);
    const std::vector<double> rho = spectral::interpolation_radial_nodes(M);
    const std::vector<double> phi = spectral::interpolation_angular_nodes(N);
    spectral::SampleGrid P2(M + 1, N), Q2(M + 1, N);
    for (int m = 0; m <= M; ++m) {
      for (int n = 0; n < N; ++n) {
        const spectral::FieldJet jet = spectral::eval_field(f, rho[m], phi[n]);
        P2(m, n) = jet.P;
        Q2(m, n) = jet.Q;
      }
    }
    const spectral::SpectralField g = spectral::interpolate(P2, Q2, N, M);
    const double samples = std::max((P2 - P).cwiseAbs().maxCoeff(), (Q2 - Q).cwiseAbs().maxCoeff());
    const double coeffs = std::max({(g.alpha - f.alpha).cwiseAbs().maxCoeff(), (g.beta - f.beta).cwiseAbs().maxCoeff(),
                                    (g.xi - f.xi).cwiseAbs().maxCoeff(), (g.eta - f.eta).cwiseAbs().maxCoeff()});
    require(samples <= 1e-12 && coeffs <= 1e-12, fmt("interpolation idempotence %.1e / %.1e", samples, coeffs));
  }

  // D and F do not see a rigid rotation of the deformed body (Q + const).
  {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const model::AnnulusDomain dom(1e-3, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      spectral::FieldJet jet{1.5 + 0.2 * u(rng), 0.3 * u(rng), 0.6 + 0.1 * u(rng),
                             0.2 * u(rng),       0.2 * u(rng), 0.1 * u(rng)};
      const double rho = u(rng);
      const model::Kinematics a = model::kinematics(jet, dom, rho);
      jet.Q += std::numbers::pi * u(rng);
      const model::Kinematics b = model::kinematics(jet, dom, rho);
      worst = std::max({worst, std::abs(a.D - b.D) / std::abs(a.D), std::abs(a.F - b.F) / a.F});
    }
    require(worst <= 1e-14, fmt("rotation invariance %.1e", worst));
  }

  // Symmetric boundary data keeps the solution radially symmetric.
  for (const char* key : {"radial3", "radial4"}) {
    const analysis::SolveOutcome& o = runs.get(key, key == std::string("radial3") ? kRadial3 : kRadial4);
    const double m = non_symmetric_magnitude(o.field);
    require(m <= 1e-8, fmt("%s non-symmetric modes %.1e", key, m));
  }

  // Determinism: a repeated solve is bit-identical.
  {
    const analysis::SolveOutcome& first = runs.get("radial3", kRadial3);
    const analysis::SolveOutcome again = analysis::run_problem(config::parse_config(kRadial3));
    require(again.report.y == first.report.y && again.report.history.size() == first.report.history.size() &&
                again.report.energy == first.report.energy,
            "repeat run differs");
  }

  // Solver invariants on every run recorded so far.
  int checked = 0;
  for (const auto& [key, o] : runs.all()) {
    const std::string v = run_checks::run_invariants(o.report, o.config.solver);
    require(v.empty(), key + ": " + v);
    ++checked;
  }

  std::string detail = fmt("quadrature, idempotence, rotation, symmetry, determinism, invariants on %d runs", checked);
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

Verdict criterion_10() {
  const config::ProblemConfig base = config::parse_config(R"({"eps": 1e-3, "gamma": 1, "N": 16, "M": 32})");
  const std::vector<std::pair<double, double>> radial = {{1.6, 1.6}, {1.8, 1.8}, {2.0, 2.0}, {2.2, 2.2}, {2.4, 2.4}};
  const analysis::SweepResult r = analysis::sweep_lambda(base, radial);
  std::vector<double> radii;
  bool ok = true;
  std::string detail = "lambda 1.6..2.4 radii";
  for (const analysis::SweepRow& row : r.rows) {
    ok = ok && row.ok;
    radii.push_back(row.metrics.radius());
    detail += fmt(" %.6f", row.metrics.radius());
  }
  const bool radii_up = analysis::strictly_increasing(radii);

  std::vector<std::pair<double, double>> oval;
  for (double l1 : {2.1, 2.25, 2.4, 2.55}) oval.push_back({l1, l1 / 1.2});
  const analysis::SweepResult o = analysis::sweep_lambda(base, oval);
  detail += "; lambda1 2.1..2.55 at lambda1/lambda2 1.2 axes";
  for (const analysis::SweepRow& row : o.rows) {
    ok = ok && row.ok;
    detail += fmt(" %.6f/%.6f", row.metrics.semi_major, row.metrics.semi_minor);
  }
  detail += fmt("; eps 1e-3, all rows converged: %s", ok ? "yes" : "no");
  return {ok && radii_up && o.semi_major_increasing && o.semi_minor_increasing, detail};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict") {
      strict = true;
    } else {
      const int id = std::atoi(arg.c_str());
      if (id < 1 || id > 10) {
        std::fprintf(stderr, "usage: acceptance [--strict] [criterion 1..10 ...]\n");
        return 2;
      }
      selected.insert(id);
    }
  }
  if (selected.empty()) {
    for (int id = 1; id <= 10; ++id) selected.insert(id);
  }

  Runs runs;
  const std::map<int, std::function<Verdict()>> criteria = {
      {1, [&] { return criterion_1(runs); }}, {2, [&] { return criterion_2(runs); }},
      {3, [&] { return criterion_3(runs); }}, {4, [] { return criterion_4(); }},
      {5, [] { return criterion_5(); }},      {6, [] { return criterion_6(); }},
      {7, [&] { return criterion_7(runs); }}, {8, [&] { return criterion_8(runs); }},
      {9, [&] { return criterion_9(runs); }}, {10, [] { return criterion_10(); }},
  };
  int failed = 0;
  for (int id : selected) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria.at(id)();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%zu criteria evaluated, %d passed, %d failed\n", selected.size(),
              static_cast<int>(selected.size()) - failed, failed);
  return strict && failed > 0 ? 1 : 0;
}
