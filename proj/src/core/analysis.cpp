#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include <Eigen/QR>

#include "oracle.hpp"

namespace cavity::analysis {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;

// Maximises f on [a, b] by golden-section search.
template <class F>
double golden_max(F&& f, double a, double b, int iterations = 80) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations && b - a > 1e-15 * (1.0 + std::abs(a)); ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? x1 : x2;
}

}  // namespace

CavityMetrics cavity_metrics(const spectral::SpectralField& field, int n_samples) {
  n_samples = std::max(n_samples, 256);
  auto radius = [&field](double phi) { return spectral::eval_field(field, -1.0, phi).P; };
  const double h = 2.0 * kPi / n_samples;
  int i_max = 0;
  int i_min = 0;
  double v_max = -std::numeric_limits<double>::infinity();
  double v_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double v = radius(i * h);
    if (v > v_max) {
      v_max = v;
      i_max = i;
    }
    if (v < v_min) {
      v_min = v;
      i_min = i;
    }
  }
  CavityMetrics out;
  out.phi_major = golden_max(radius, (i_max - 1) * h, (i_max + 1) * h);
  out.phi_minor = golden_max([&](double phi) { return -radius(phi); }, (i_min - 1) * h, (i_min + 1) * h);
  out.semi_major = std::max(v_max, radius(out.phi_major));
  out.semi_minor = std::min(v_min, radius(out.phi_minor));
  out.phi_major = std::remainder(out.phi_major, 2.0 * kPi);
  out.phi_minor = std::remainder(out.phi_minor, 2.0 * kPi);
  if (out.phi_major < 0.0) out.phi_major += 2.0 * kPi;
  if (out.phi_minor < 0.0) out.phi_minor += 2.0 * kPi;
  return out;
}

double RegressedModel::predict(int N, int M) const {
  double q = q_inf + c2 * std::pow(double(M), -nu2);
  if (!reduced) q += c1 * std::pow(double(N), -nu1);
  return q;
}

namespace {

struct FitProblem {
  Eigen::VectorXd q;
  Eigen::VectorXd n_scaled;  // N / N_min
  Eigen::VectorXd m_scaled;  // M / M_min
  double n_ref = 1.0;
  double m_ref = 1.0;
  bool reduced = false;

  [[nodiscard]] Eigen::MatrixXd design(double nu1, double nu2) const {
    const Eigen::Index rows = q.size();
    Eigen::MatrixXd A(rows, reduced ? 2 : 3);
    for (Eigen::Index i = 0; i < rows; ++i) {
      A(i, 0) = 1.0;
      A(i, 1) = std::pow(m_scaled[i], -nu2);
      if (!reduced) A(i, 2) = std::pow(n_scaled[i], -nu1);
    }
    return A;
  }

  // Linear coefficients for fixed exponents.
  [[nodiscard]] Eigen::VectorXd coefficients(double nu1, double nu2) const {
    return design(nu1, nu2).colPivHouseholderQr().solve(q);
  }

  [[nodiscard]] Eigen::VectorXd residual(double nu1, double nu2) const {
    return design(nu1, nu2) * coefficients(nu1, nu2) - q;
  }
};

constexpr double kNuMin = 1e-3;
constexpr double kNuMax = 100.0;

// Levenberg-Marquardt on the exponents; the linear parameters are eliminated.
Eigen::Vector2d refine(const FitProblem& fit, Eigen::Vector2d nu) {
  const int dims = fit.reduced ? 1 : 2;
  auto res = [&](const Eigen::Vector2d& v) { return fit.residual(v[0], v[1]); };
  Eigen::VectorXd r = res(nu);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd J(r.size(), dims);
    for (int d = 0; d < dims; ++d) {
      const int idx = fit.reduced ? 1 : d;
      const double h = 1e-6 * std::max(1.0, std::abs(nu[idx]));
      Eigen::Vector2d up = nu, down = nu;
      up[idx] += h;
      down[idx] = std::max(kNuMin, down[idx] - h);
      J.col(d) = (res(up) - res(down)) / (up[idx] - down[idx]);
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.norm() <= 1e-30) break;
    // Marquardt scaling keeps the damping independent of the data's units.
    const Eigen::VectorXd scale =
        JtJ.diagonal().array().max(1e-12 * JtJ.diagonal().maxCoeff()).max(1e-300).matrix();
    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += mu * scale;
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      Eigen::Vector2d trial = nu;
      for (int d = 0; d < dims; ++d) {
        const int idx = fit.reduced ? 1 : d;
        trial[idx] = std::clamp(trial[idx] + step[d], kNuMin, kNuMax);
      }
      const Eigen::VectorXd r_trial = res(trial);
      const double c = r_trial.squaredNorm();
      if (std::isfinite(c) && c < cost) {
        const bool tiny = (trial - nu).norm() <= 1e-12 * (1.0 + nu.norm());
        nu = trial;
        r = r_trial;
        cost = c;
        mu = std::max(mu * 0.3, 1e-12);
        improved = !tiny;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) break;
  }
  return nu;
}

}  // namespace

RegressedModel fit_convergence(std::span<const ConvergenceSample> samples) {
  std::set<int> distinct_N;
  std::set<int> distinct_M;
  for (const ConvergenceSample& s : samples) {
    if (s.N < 2 || s.N % 2 != 0) throw std::invalid_argument("fit: N must be even and positive");
    if (s.M < 1) throw std::invalid_argument("fit: M must be positive");
    if (!std::isfinite(s.q)) throw std::invalid_argument("fit: q must be finite");
    distinct_N.insert(s.N);
    distinct_M.insert(s.M);
  }
  const bool reduced = distinct_N.size() == 1;
  if (reduced) {
    if (distinct_M.size() < 3) {
      throw std::invalid_argument("fit: under-determined, need at least 3 distinct M");
    }
  } else if (samples.size() < 5 || distinct_M.size() < 3) {
    throw std::invalid_argument(
        "fit: under-determined, need at least 5 samples spanning 2 distinct N and 3 distinct M");
  }

  RegressedModel model;
  model.reduced = reduced;

  double q_lo = samples[0].q;
  double q_hi = samples[0].q;
  double q_sum = 0.0;
  for (const ConvergenceSample& s : samples) {
    q_lo = std::min(q_lo, s.q);
    q_hi = std::max(q_hi, s.q);
    q_sum += s.q;
  }
  if (q_hi - q_lo <= 1e-14 * std::max(1.0, std::abs(q_hi))) {
    model.degenerate = true;
    model.q_inf = q_sum / static_cast<double>(samples.size());
    return model;
  }

  FitProblem fit;
  fit.reduced = reduced;
  fit.n_ref = *distinct_N.begin();
  fit.m_ref = *distinct_M.begin();
  const Eigen::Index rows = static_cast<Eigen::Index>(samples.size());
  fit.q.resize(rows);
  fit.n_scaled.resize(rows);
  fit.m_scaled.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    fit.q[i] = samples[i].q;
    fit.n_scaled[i] = samples[i].N / fit.n_ref;
    fit.m_scaled[i] = samples[i].M / fit.m_ref;
  }

  // Grid over integer exponents; the best few seed the local refinement.
  struct Start {
    double cost;
    Eigen::Vector2d nu;
  };
  std::vector<Start> starts;
  const int nu1_max = reduced ? 1 : 30;
  for (int a = 1; a <= nu1_max; ++a) {
    for (int b = 1; b <= 12; ++b) {
      const Eigen::Vector2d nu(reduced ? 0.0 : a, b);
      const double c = fit.residual(nu[0], nu[1]).squaredNorm();
      if (std::isfinite(c)) starts.push_back({c, nu});
    }
  }
  if (starts.empty()) throw std::runtime_error("fit: no finite residual on the exponent grid");
  std::stable_sort(starts.begin(), starts.end(),
                   [](const Start& x, const Start& y) { return x.cost < y.cost; });
  starts.resize(std::min<std::size_t>(starts.size(), 8));

  Eigen::Vector2d best = starts.front().nu;
  double best_cost = starts.front().cost;
  for (const Start& s : starts) {
    const Eigen::Vector2d nu = refine(fit, s.nu);
    const double c = fit.residual(nu[0], nu[1]).squaredNorm();
    if (c < best_cost) {
      best_cost = c;
      best = nu;
    }
  }

  const Eigen::VectorXd coef = fit.coefficients(best[0], best[1]);
  model.q_inf = coef[0];
  model.nu2 = best[1];
  model.c2 = coef[1] * std::pow(fit.m_ref, model.nu2);
  if (!reduced) {
    model.nu1 = best[0];
    model.c1 = coef[2] * std::pow(fit.n_ref, model.nu1);
  }
  model.residual_norm = std::sqrt(best_cost);
  return model;
}

double interpolation_min_slope(double eps, double gamma, double lambda, int M) {
  const model::AnnulusDomain domain(eps, gamma);
  constexpr int N = 2;
  const std::vector<double> rho = spectral::interpolation_radial_nodes(M);
  spectral::SampleGrid P(M + 1, N);
  const spectral::SampleGrid Q = spectral::SampleGrid::Zero(M + 1, N);
  for (int m = 0; m <= M; ++m) {
    const double r = std::clamp(domain.rho_to_r(rho[m]), eps, gamma);
    P.row(m).setConstant(oracle::incompressible_exact(r, lambda, gamma));
  }
  const spectral::SpectralField field = spectral::interpolate(P, Q, N, M);
  auto slope = [&field](double x) { return spectral::eval_field(field, x, 0.0).P_rho; };

  constexpr int kSamples = 4096;
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> xs(kSamples + 1);
  for (int i = 0; i <= kSamples; ++i) {
    // Cosine spacing clusters samples at the ends, where the slope varies fastest.
    xs[i] = -std::cos(kPi * i / kSamples);
    const double v = slope(xs[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = xs[std::max(best - 1, 0)];
  const double b = xs[std::min(best + 1, kSamples)];
  const double x = golden_max([&](double t) { return -slope(t); }, a, b);
  return std::min(best_value, slope(x));
}

SolveOutcome run_problem(const config::ProblemConfig& cfg, const assembly::UnknownVector* warm) {
  const assembly::Discretization disc = config::make_discretization(cfg);
  const model::BoundaryStretch stretch = config::make_stretch(cfg);
  SolveOutcome out;
  out.config = cfg;
  assembly::UnknownVector y0;
  if (warm && warm->size() == disc.layout().size() && disc.evaluate(*warm, false).admissible()) {
    y0 = *warm;
    out.warm_started = true;
  } else {
    y0 = solver::initial_guess(disc, stretch, cfg.seed_mode, cfg.oracle_grid);
  }
  out.polish = solver::polish_seed(disc, y0, cfg.seed_polish);
  y0 = std::move(out.polish.y);
  out.polish.y = assembly::UnknownVector();
  out.report = solver::solve(disc, y0, cfg.solver);
  out.field = disc.field(out.report.y);
  out.metrics = cavity_metrics(out.field);
  return out;
}

bool strictly_increasing(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) return false;
  }
  return true;
}

SweepResult sweep_lambda(const config::ProblemConfig& base,
                         std::span<const std::pair<double, double>> stretches, bool warm_start) {
  SweepResult result;
  std::optional<assembly::UnknownVector> warm;
  std::vector<double> majors, minors;
  for (const auto& [l1, l2] : stretches) {
    SweepRow row;
    row.lambda1 = l1;
    row.lambda2 = l2;
    try {
      config::ProblemConfig cfg = base;
      cfg.lambda1 = l1;
      cfg.lambda2 = l2;
      cfg.study.reset();
      const SolveOutcome s = run_problem(cfg, warm_start && warm ? &*warm : nullptr);
      row.ok = s.report.success();
      row.outcome = solver::to_string(s.report.outcome);
      if (!row.ok) row.failure = row.outcome;
      row.energy = s.report.energy;
      row.energy_resolved = s.report.energy_resolved;
      row.residual_norm = s.report.residual_norm;
      row.metrics = s.metrics;
      warm = s.report.y;
      majors.push_back(row.metrics.semi_major);
      minors.push_back(row.metrics.semi_minor);
    } catch (const std::exception& e) {
      row.ok = false;
      row.outcome = "error";
      row.failure = e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.energy = row.energy_resolved = row.residual_norm = nan;
      row.metrics.semi_major = row.metrics.semi_minor = nan;
    }
    result.rows.push_back(row);
  }
  const bool complete = majors.size() == stretches.size();
  result.semi_major_increasing = complete && strictly_increasing(majors);
  result.semi_minor_increasing = complete && strictly_increasing(minors);
  return result;
}

}  // namespace cavity::analysis
