#include "solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "oracle.hpp"

namespace cavity::solver {

void SolverConfig::validate() const {
  auto fail = [](const char* field, const char* why) {
    throw std::invalid_argument(std::string("solver.") + field + ": " + why);
  };
  if (!(tol_start > 0.0)) fail("tol_start", "must be positive");
  if (!(tol_final > 0.0)) fail("tol_final", "must be positive");
  if (!(tol_final < tol_start)) fail("tol_final", "must be smaller than tol_start");
  if (!(tol_shrink > 1.0)) fail("tol_shrink", "must exceed 1");
  if (!(step_grow > 1.0)) fail("step_grow", "must exceed 1");
  if (!(step_shrink > 1.0)) fail("step_shrink", "must exceed 1");
  if (!(step_min > 0.0)) fail("step_min", "must be positive");
  if (max_outer_iterations < 1) fail("max_outer_iterations", "must be positive");
  if (!(broyden_skip >= 0.0)) fail("broyden_skip", "must be non-negative");
}

const char* to_string(Phase phase) {
  return phase == Phase::gradient ? "gradient" : "quasi-newton";
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::converged: return "converged";
    case Outcome::gradient_stall: return "gradient_stall";
    case Outcome::tolerance_exhausted: return "tolerance_exhausted";
    case Outcome::iteration_limit: return "iteration_limit";
    case Outcome::singular_jacobian: return "singular_jacobian";
  }
  return "unknown";
}

Objective make_objective(const assembly::Discretization& disc) {
  return {[&disc](const Eigen::VectorXd& y) { return disc.evaluate(y, true); },
          [&disc](const Eigen::VectorXd& y) { return assembly::jacobian_fd(disc, y); }};
}

SolverState make_state(const Objective& objective, const Eigen::VectorXd& y0,
                       const SolverConfig& config) {
  assembly::Evaluation e = objective.evaluate(y0);
  if (!e.admissible()) throw std::domain_error("initial guess is not orientation preserving");
  SolverState state;
  state.y = y0;
  state.f = std::move(e.residual);
  state.energy = e.energy.value;
  state.min_D = e.min_D;
  state.tol = config.tol_start;
  state.evaluations = 1;
  return state;
}

namespace {

void record(SolverState& state, const assembly::Evaluation& e, double t, bool accepted) {
  HistoryEntry h;
  h.iteration = state.evaluations;
  h.phase = state.phase;
  h.t = t;
  h.energy = e.energy.value;
  h.residual_norm = e.admissible() ? e.residual.norm() : std::numeric_limits<double>::infinity();
  h.min_D = e.min_D;
  h.tol = state.tol;
  h.accepted = accepted;
  state.history.push_back(h);
}

void accept(SolverState& state, const Eigen::VectorXd& y, assembly::Evaluation&& e) {
  state.y = y;
  state.f = std::move(e.residual);
  state.energy = e.energy.value;
  state.min_D = e.min_D;
}

}  // namespace

PhaseExit gradient_phase(const Objective& objective, SolverState& state, const SolverConfig& config) {
  state.phase = Phase::gradient;
  double t_prev = 1.0;
  while (true) {
    if (state.residual_norm() < state.tol) return PhaseExit::below_tolerance;
    double t = config.step_grow * t_prev;
    while (true) {
      if (t < config.step_min) {
        state.t = t;
        return PhaseExit::stalled;
      }
      if (state.evaluations >= config.max_outer_iterations) return PhaseExit::iteration_limit;
      const Eigen::VectorXd trial = state.y - t * state.f;
      assembly::Evaluation e = objective.evaluate(trial);
      ++state.evaluations;
      const bool ok = e.admissible() && e.energy.value < state.energy && e.min_D > 0.0;
      record(state, e, t, ok);
      if (ok) {
        accept(state, trial, std::move(e));
        ++state.gradient_iterations;
        t_prev = t;
        state.t = t;
        break;
      }
      t /= config.step_shrink;
    }
  }
}

bool broyden_update(Eigen::MatrixXd& B, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                    double skip_tol) {
  const Eigen::VectorXd Bz = B * z;
  const double denom = s.dot(Bz);
  if (!(std::abs(denom) > skip_tol * s.norm() * Bz.norm())) return false;
  const Eigen::RowVectorXd sB = s.transpose() * B;
  B.noalias() += ((s - Bz) / denom) * sB;
  return true;
}

std::optional<Eigen::MatrixXd> invert_jacobian(const Eigen::MatrixXd& J) {
  const Eigen::Index n = J.rows();
  auto attempt = [n](const Eigen::MatrixXd& A) -> std::optional<Eigen::MatrixXd> {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-18)) return std::nullopt;
    Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
    if (!inv.allFinite()) return std::nullopt;
    return inv;
  };
  if (auto inv = attempt(J)) return inv;
  const double shift = 1e-10 * std::abs(J.trace()) / static_cast<double>(n);
  Eigen::MatrixXd shifted = J;
  shifted.diagonal().array() += shift;
  return attempt(shifted);
}

PhaseExit quasi_newton_phase(const Objective& objective, SolverState& state,
                             const SolverConfig& config) {
  state.phase = Phase::quasi_newton;
  if (state.residual_norm() < config.tol_final) return PhaseExit::converged;

  auto inverse = invert_jacobian(objective.jacobian(state.y));
  if (!inverse) {
    state.events.push_back("Jacobian singular at quasi-Newton entry");
    return PhaseExit::singular_jacobian;
  }
  state.B = std::move(*inverse);

  double t_prev = 1.0;
  while (true) {
    const double fnorm = state.residual_norm();
    if (fnorm < config.tol_final) return PhaseExit::converged;
    const Eigen::VectorXd direction = state.B * state.f;
    double t = config.step_grow * t_prev;
    while (true) {
      if (t < config.step_min) {
        state.t = t;
        return PhaseExit::stalled;
      }
      if (state.evaluations >= config.max_outer_iterations) return PhaseExit::iteration_limit;
      const Eigen::VectorXd trial = state.y - t * direction;
      assembly::Evaluation e = objective.evaluate(trial);
      ++state.evaluations;
      const bool ok = e.admissible() && e.residual.norm() < fnorm && e.min_D > 0.0;
      record(state, e, t, ok);
      if (ok) {
        const Eigen::VectorXd s = trial - state.y;
        const Eigen::VectorXd z = e.residual - state.f;
        accept(state, trial, std::move(e));
        ++state.quasi_newton_iterations;
        if (!broyden_update(state.B, s, z, config.broyden_skip)) {
          ++state.broyden_skips;
          state.events.push_back("Broyden skip at evaluation " + std::to_string(state.evaluations));
        }
        t_prev = t;
        state.t = t;
        break;
      }
      t /= config.step_shrink;
    }
  }
}

SolveReport solve(const Objective& objective, const Eigen::VectorXd& y0, const SolverConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  SolverState state = make_state(objective, y0, config);
  SolveReport report;
  report.restarts = 0;
  report.initial_energy = state.energy;
  report.initial_residual_norm = state.residual_norm();

  // TOL runs tol_start, tol_start/10, ...; the relative slack keeps the
  // comparison robust to the inexact repeated division.
  const double stop_below = config.tol_final * (1.0 - 1e-9);
  while (true) {
    if (state.tol < stop_below) {
      report.outcome = state.residual_norm() < config.tol_final ? Outcome::converged
                                                                : Outcome::tolerance_exhausted;
      break;
    }
    PhaseExit exit = gradient_phase(objective, state, config);
    if (exit == PhaseExit::stalled) {
      state.events.push_back("gradient stall at TOL " + std::to_string(state.tol));
      report.outcome = state.residual_norm() < config.tol_final ? Outcome::converged
                                                                : Outcome::gradient_stall;
      break;
    }
    if (exit == PhaseExit::iteration_limit) {
      report.outcome = Outcome::iteration_limit;
      break;
    }
    exit = quasi_newton_phase(objective, state, config);
    if (exit == PhaseExit::converged) {
      report.outcome = Outcome::converged;
      break;
    }
    if (exit == PhaseExit::iteration_limit) {
      report.outcome = Outcome::iteration_limit;
      break;
    }
    if (exit == PhaseExit::singular_jacobian) {
      report.outcome = Outcome::singular_jacobian;
      break;
    }
    state.tol /= config.tol_shrink;
    ++report.restarts;
    std::ostringstream msg;
    msg << "quasi-Newton stall, restarting gradient phase with TOL " << state.tol;
    state.events.push_back(msg.str());
  }

  report.y = state.y;
  report.residual_norm = state.residual_norm();
  report.energy = state.energy;
  report.min_D = state.min_D;
  report.min_D_fine = state.min_D;
  report.gradient_iterations = state.gradient_iterations;
  report.quasi_newton_iterations = state.quasi_newton_iterations;
  report.evaluations = state.evaluations;
  report.broyden_skips = state.broyden_skips;
  report.history = std::move(state.history);
  report.events = std::move(state.events);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SolveReport solve(const assembly::Discretization& disc, const assembly::UnknownVector& y0,
                  const SolverConfig& config) {
  SolveReport report = solve(make_objective(disc), y0, config);
  report.min_D_fine = fine_grid_min_determinant(disc, report.y);
  report.energy_resolved = assembly::resolved_energy(disc, report.y);
  return report;
}

namespace {

// D on the cavity boundary, which no Gauss-Chebyshev node reaches.
bool cavity_boundary_admissible(const assembly::Discretization& disc,
                                const assembly::UnknownVector& y) {
  const spectral::SpectralField field = disc.field(y);
  const int samples = 2 * disc.rule().angular_count();
  for (int n = 0; n < samples; ++n) {
    const double phi = 2.0 * std::numbers::pi * n / samples;
    if (!(model::kinematics(spectral::eval_field(field, -1.0, phi), disc.domain(), -1.0).D > 0.0)) {
      return false;
    }
  }
  return true;
}

}  // namespace

PolishReport polish_seed(const assembly::Discretization& disc, const assembly::UnknownVector& y0,
                         const PolishConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  PolishReport out;
  out.y = y0;
  assembly::Evaluation current = disc.evaluate(out.y);
  if (!current.admissible()) throw std::domain_error("polish_seed: starting guess is inadmissible");
  out.residual_before = current.residual.norm();
  double mu = 0.0;
  while (out.iterations < config.max_iterations && current.residual.norm() >= config.target) {
    out.applied = true;
    const Eigen::MatrixXd J = assembly::jacobian_fd(disc, out.y);
    const Eigen::MatrixXd S = 0.5 * (J + J.transpose());
    const Eigen::VectorXd scale = S.diagonal().cwiseAbs();
    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::MatrixXd A = S;
      A.diagonal() += mu * scale;
      const Eigen::VectorXd step = A.ldlt().solve(current.residual);
      const assembly::UnknownVector trial = out.y - step;
      assembly::Evaluation e = disc.evaluate(trial);
      if (e.admissible() && e.energy.value < current.energy.value &&
          cavity_boundary_admissible(disc, trial)) {
        out.y = trial;
        current = std::move(e);
        mu = mu / 8.0 < 1e-8 ? 0.0 : mu / 8.0;
        accepted = true;
      } else {
        mu = mu == 0.0 ? 1e-6 : 8.0 * mu;
      }
    }
    if (!accepted) break;
    ++out.iterations;
  }
  out.residual_after = current.residual.norm();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double fine_grid_min_determinant(const assembly::Discretization& disc,
                                 const assembly::UnknownVector& y) {
  const spectral::QuadratureRule& rule = disc.rule();
  const spectral::QuadratureRule fine =
      spectral::product_rule(2 * rule.angular_count(), 2 * rule.radial_count() - 1);
  return model::h2_diagnostics(disc.field(y), disc.domain(), fine).min_D;
}

const char* to_string(SeedMode mode) {
  switch (mode) {
    case SeedMode::radial: return "radial";
    case SeedMode::incompressible: return "incompressible";
    case SeedMode::affine: return "affine";
  }
  return "unknown";
}

SeedMode parse_seed_mode(const std::string& name) {
  for (SeedMode m : {SeedMode::radial, SeedMode::incompressible, SeedMode::affine}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown seed mode '" + name + "'");
}

namespace {

using ProfileFn = std::function<double(double r, double phi)>;

assembly::UnknownVector sampled_seed(const assembly::Discretization& disc, const ProfileFn& P0,
                                     const ProfileFn& Q0) {
  const int N = disc.layout().N();
  const int M = disc.layout().M();
  const model::AnnulusDomain& domain = disc.domain();
  const std::vector<double> rho = spectral::interpolation_radial_nodes(M);
  const std::vector<double> phi = spectral::interpolation_angular_nodes(N);
  spectral::SampleGrid P(M + 1, N);
  spectral::SampleGrid Q(M + 1, N);
  for (int m = 0; m <= M; ++m) {
    const double r = std::clamp(domain.rho_to_r(rho[m]), domain.eps(), domain.gamma());
    for (int n = 0; n < N; ++n) {
      P(m, n) = P0(r, phi[n]);
      Q(m, n) = Q0(r, phi[n]);
    }
  }
  return assembly::free_coefficients(spectral::interpolate(P, Q, N, M));
}

}  // namespace

assembly::UnknownVector initial_guess(const assembly::Discretization& disc,
                                      const model::BoundaryStretch& stretch, SeedMode mode,
                                      int oracle_grid) {
  const model::AnnulusDomain& domain = disc.domain();
  const double gamma = domain.gamma();
  const double lambda = stretch.mean();
  const ProfileFn no_twist = [](double, double) { return 0.0; };
  auto admissible = [&disc](const assembly::UnknownVector& y) {
    return disc.evaluate(y, false).admissible();
  };

  if (mode == SeedMode::radial) {
    try {
      const oracle::RadialProfile profile =
          oracle::radial_reference(domain.eps(), gamma, lambda, disc.material(), oracle_grid);
      const assembly::UnknownVector seed = sampled_seed(
          disc,
          [&](double r, double phi) {
            return oracle::profile_value(profile, r) * stretch.radius(gamma, phi) / (lambda * gamma);
          },
          [&](double, double phi) { return stretch.angle_offset(phi); });
      if (admissible(seed)) return seed;
    } catch (const std::exception&) {
      // 1-D solve failed; use the closed-form seed instead.
    }
    mode = SeedMode::incompressible;
  }
  if (mode == SeedMode::incompressible) {
    try {
      const assembly::UnknownVector seed = sampled_seed(
          disc, [&](double r, double) { return oracle::incompressible_exact(r, lambda, gamma); },
          no_twist);
      if (admissible(seed)) return seed;
    } catch (const std::domain_error&) {
      // stretch below 1: the closed form has no real value near the cavity
    }
  }
  spectral::SpectralField field(disc.layout().N(), disc.layout().M());
  field.alpha(0, 1) = lambda * 0.5 * (gamma - domain.eps());
  return assembly::free_coefficients(field);
}

}  // namespace cavity::solver
