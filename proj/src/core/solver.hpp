#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "model.hpp"

namespace cavity::solver {

struct SolverConfig {
  double tol_start = 1e-1;
  double tol_final = 1e-10;
  double tol_shrink = 10.0;
  double step_grow = 4.0;
  double step_shrink = 2.0;
  double step_min = 1e-16;
  /// Bound on the total number of trial evaluations across all phases.
  long max_outer_iterations = 1'000'000;
  /// Relative threshold below which a Broyden denominator is treated as zero.
  double broyden_skip = 1e-14;

  /// Throws std::invalid_argument with the offending field name.
  void validate() const;
};

enum class Phase { gradient, quasi_newton };

[[nodiscard]] const char* to_string(Phase phase);

/// One trial step. Rejected trials are recorded as well so the step-size
/// protocol can be audited.
struct HistoryEntry {
  long iteration = 0;
  Phase phase = Phase::gradient;
  double t = 0.0;
  double energy = 0.0;
  double residual_norm = 0.0;
  double min_D = 0.0;
  double tol = 0.0;
  bool accepted = false;
};

enum class Outcome { converged, gradient_stall, tolerance_exhausted, iteration_limit, singular_jacobian };

[[nodiscard]] const char* to_string(Outcome outcome);

struct SolveReport {
  assembly::UnknownVector y;
  double initial_energy = 0.0;   ///< discrete E at the starting point
  double initial_residual_norm = 0.0;
  double residual_norm = 0.0;
  double energy = 0.0;           ///< discrete E(y), the quantity being minimised
  double energy_resolved = 0.0;  ///< energy of the same field on assembly::resolved_rule
  double min_D = 0.0;
  double min_D_fine = 0.0;
  long gradient_iterations = 0;
  long quasi_newton_iterations = 0;
  long evaluations = 0;
  int restarts = 0;
  int broyden_skips = 0;
  double wall_seconds = 0.0;
  Outcome outcome = Outcome::iteration_limit;
  std::vector<HistoryEntry> history;
  std::vector<std::string> events;

  [[nodiscard]] bool success() const { return outcome == Outcome::converged; }
};

/// What the phases need from a problem: a combined energy/residual pass and
/// a Jacobian. Lets the step logic run on surrogate problems in tests.
struct Objective {
  std::function<assembly::Evaluation(const Eigen::VectorXd&)> evaluate;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

[[nodiscard]] Objective make_objective(const assembly::Discretization& disc);

struct SolverState {
  Eigen::VectorXd y;
  Eigen::VectorXd f;
  double energy = 0.0;
  double min_D = 0.0;
  Eigen::MatrixXd B;
  double t = 1.0;
  Phase phase = Phase::gradient;
  double tol = 1e-1;

  long evaluations = 0;
  long gradient_iterations = 0;
  long quasi_newton_iterations = 0;
  int broyden_skips = 0;
  std::vector<HistoryEntry> history;
  std::vector<std::string> events;

  [[nodiscard]] double residual_norm() const { return f.norm(); }
};

/// Admissible starting state. Throws std::domain_error if y0 has D <= 0 somewhere.
[[nodiscard]] SolverState make_state(const Objective& objective, const Eigen::VectorXd& y0,
                                     const SolverConfig& config);

enum class PhaseExit { below_tolerance, converged, stalled, iteration_limit, singular_jacobian };

/// Gradient descent with step growth and halving until ||f|| < TOL or the
/// trial step underflows. Accepted steps decrease E and keep D > 0.
PhaseExit gradient_phase(const Objective& objective, SolverState& state, const SolverConfig& config);

/// Damped quasi-Newton with Broyden inverse updates, starting from the
/// inverted Jacobian. Accepted steps decrease ||f|| and keep D > 0.
PhaseExit quasi_newton_phase(const Objective& objective, SolverState& state,
                             const SolverConfig& config);

/// B += (s - B z) s^T B / (s^T B z). Returns false (B untouched) when the
/// denominator is below skip_tol * |s| |B z|.
bool broyden_update(Eigen::MatrixXd& B, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                    double skip_tol);

/// Dense LU inverse; retries once with a small Tikhonov shift when the matrix
/// is singular to working precision.
[[nodiscard]] std::optional<Eigen::MatrixXd> invert_jacobian(const Eigen::MatrixXd& J);

/// Full gradient / quasi-Newton loop with the tolerance cascade.
[[nodiscard]] SolveReport solve(const Objective& objective, const Eigen::VectorXd& y0,
                                const SolverConfig& config);

/// Same, plus the grid diagnostics that need the discretization.
[[nodiscard]] SolveReport solve(const assembly::Discretization& disc, const assembly::UnknownVector& y0,
                                const SolverConfig& config);

enum class SeedMode { radial, incompressible, affine };

[[nodiscard]] const char* to_string(SeedMode mode);
/// Throws std::invalid_argument for unknown names.
[[nodiscard]] SeedMode parse_seed_mode(const std::string& name);

/// Starting guess, interpolated on the Chebyshev-Fourier grid and converted
/// to free coefficients.
///
/// radial: the 1-D reference profile s(r) at the mean stretch, scaled per
///   angle by the boundary radius ratio, with Q equal to the boundary angle
///   offset. Needs one 1-D solve with `oracle_grid` elements.
/// incompressible: sqrt(l^2 gamma^2 + r^2 - gamma^2) with l the mean stretch, Q = 0.
/// affine: P = l r, Q = 0.
///
/// An inadmissible seed (D <= 0 on the quadrature grid) falls through to the
/// next mode in that order.
[[nodiscard]] assembly::UnknownVector initial_guess(const assembly::Discretization& disc,
                                                    const model::BoundaryStretch& stretch,
                                                    SeedMode mode = SeedMode::radial,
                                                    int oracle_grid = 2000);

struct PolishConfig {
  int max_iterations = 40;  ///< 0 disables the stage
  double target = 1e-3;     ///< stop once ||f|| falls below this
};

struct PolishReport {
  assembly::UnknownVector y;
  bool applied = false;  ///< false when the seed already met the target
  int iterations = 0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  double wall_seconds = 0.0;
};

/// Levenberg-Marquardt refinement of a starting guess on the discrete
/// energy: steps solve (S + mu diag|S|) d = f with S the symmetrised
/// central-difference Jacobian and are accepted when E decreases and D stays
/// positive on the quadrature grid and on the cavity boundary rho = -1.
/// Stops at the target, after max_iterations, or when no step is accepted.
[[nodiscard]] PolishReport polish_seed(const assembly::Discretization& disc,
                                       const assembly::UnknownVector& y0,
                                       const PolishConfig& config);

/// Smallest D on a grid with twice the quadrature resolution in each direction.
[[nodiscard]] double fine_grid_min_determinant(const assembly::Discretization& disc,
                                               const assembly::UnknownVector& y);

}  // namespace cavity::solver
