#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "assembly.hpp"
#include "config.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace cavity::analysis {

/// Shape of the deformed inner boundary |u| = P(-1, phi).
struct CavityMetrics {
  double semi_major = 0.0;   ///< max over phi
  double semi_minor = 0.0;   ///< min over phi
  double phi_major = 0.0;    ///< reference angle of the maximum
  double phi_minor = 0.0;
  [[nodiscard]] double radius() const { return 0.5 * (semi_major + semi_minor); }
};

/// Samples P(-1, phi) at n_samples equispaced angles (at least 256) and
/// polishes the extreme samples by golden-section search.
[[nodiscard]] CavityMetrics cavity_metrics(const spectral::SpectralField& field, int n_samples = 512);

struct ConvergenceSample {
  int N = 0;
  int M = 0;
  double q = 0.0;
};

/// q ~ q_inf + c1 N^-nu1 + c2 M^-nu2. `reduced` drops the N term (one
/// distinct N); `degenerate` flags constant data.
struct RegressedModel {
  double q_inf = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double residual_norm = 0.0;
  bool reduced = false;
  bool degenerate = false;

  [[nodiscard]] double predict(int N, int M) const;
};

/// Least squares over (q_inf, c1, c2, nu1, nu2). For fixed exponents the
/// model is linear, so the search runs over (nu1, nu2) only: a grid over
/// {1..30} x {1..12} followed by Levenberg-Marquardt refinement. Throws
/// std::invalid_argument when the data cannot determine the model (fewer
/// than 5 samples, 2 distinct N and 3 distinct M; or, with a single N, fewer
/// than 3 distinct M).
[[nodiscard]] RegressedModel fit_convergence(std::span<const ConvergenceSample> samples);

/// Smallest d/drho of the interpolated incompressible profile on [-1, 1]
/// (dense sampling plus golden-section refinement). A negative value means
/// the interpolant is not orientation preserving.
[[nodiscard]] double interpolation_min_slope(double eps, double gamma, double lambda, int M);

/// Everything a caller usually wants from one solve.
struct SolveOutcome {
  config::ProblemConfig config;
  solver::SolveReport report;
  solver::PolishReport polish;  ///< y is left empty
  bool warm_started = false;
  CavityMetrics metrics;
  spectral::SpectralField field;
};

/// Builds the discretization, seeds (or warm-starts from `warm`, falling back
/// to the configured seed when `warm` is inadmissible for this problem),
/// polishes the starting point and solves. Throws what the config validation or the seed throws.
[[nodiscard]] SolveOutcome run_problem(const config::ProblemConfig& config,
                                       const assembly::UnknownVector* warm = nullptr);

struct SweepRow {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool ok = false;
  std::string failure;  ///< empty when ok
  double energy = 0.0;
  double energy_resolved = 0.0;
  double residual_norm = 0.0;
  CavityMetrics metrics;
  std::string outcome;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool semi_major_increasing = false;
  bool semi_minor_increasing = false;
};

/// Solves along ascending stretches, each solve warm-started from the
/// previous converged one when warm_start is set. A failing point is kept as
/// a row with ok = false and the sweep continues.
[[nodiscard]] SweepResult sweep_lambda(const config::ProblemConfig& base,
                                       std::span<const std::pair<double, double>> stretches,
                                       bool warm_start = true);

[[nodiscard]] bool strictly_increasing(std::span<const double> values);

}  // namespace cavity::analysis
