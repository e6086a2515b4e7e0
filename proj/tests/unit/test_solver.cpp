#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "run_checks.hpp"
#include "oracle.hpp"
#include "solver.hpp"

using namespace cavity;

namespace {

// E = y^T A y / 2 - b^T y with gradient A y - b and D fixed at 1.
solver::Objective quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  return {[A, b](const Eigen::VectorXd& y) {
            assembly::Evaluation e;
            e.energy.value = 0.5 * y.dot(A * y) - b.dot(y);
            e.min_D = 1.0;
            e.residual = A * y - b;
            return e;
          },
          [A](const Eigen::VectorXd&) { return A; }};
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("config validation names the field") {
    solver::SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.tol_final = 1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("solver.tol_final"), std::invalid_argument);
    c = {};
    c.step_grow = 1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("solver.step_grow"), std::invalid_argument);
  }

  TEST_CASE("Broyden update satisfies the secant condition with a rank-one change") {
    std::mt19937 rng(1);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd B(5, 5);
    Eigen::VectorXd s(5), z(5);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = n01(rng);
    B += 5.0 * Eigen::MatrixXd::Identity(5, 5);
    for (int i = 0; i < 5; ++i) {
      s[i] = n01(rng);
      z[i] = n01(rng);
    }
    const Eigen::MatrixXd B0 = B;
    REQUIRE(solver::broyden_update(B, s, z, 1e-14));
    CHECK((B * z - s).norm() <= 1e-12 * s.norm());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B - B0);
    CHECK(svd.singularValues()[1] <= 1e-12 * svd.singularValues()[0]);
    // s orthogonal to B z: the update is skipped and B left alone.
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    CHECK_FALSE(solver::broyden_update(I, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 1e-14));
    CHECK(I == Eigen::MatrixXd::Identity(2, 2));
  }

  TEST_CASE("gradient phase step protocol on a one-dimensional quadratic") {
    const Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const solver::Objective obj = quadratic(A, Eigen::VectorXd::Zero(1));
    solver::SolverConfig c;
    solver::SolverState s = solver::make_state(obj, Eigen::VectorXd::Constant(1, 1.0), c);
    s.tol = 1e-3;
    CHECK(solver::gradient_phase(obj, s, c) == solver::PhaseExit::below_tolerance);
    // t = 4 overshoots to -3, t = 2 lands on -1 with equal energy, t = 1 is exact.
    REQUIRE(s.history.size() == 3);
    CHECK(s.history[0].t == 4.0);
    CHECK_FALSE(s.history[0].accepted);
    CHECK(s.history[1].t == 2.0);
    CHECK_FALSE(s.history[1].accepted);
    CHECK(s.history[2].t == 1.0);
    CHECK(s.history[2].accepted);
    CHECK(s.y[0] == 0.0);

    // With curvature 0.3 the steps 4, 16, 8, 4, ... follow grow-then-halve.
    const solver::Objective soft = quadratic(Eigen::MatrixXd::Constant(1, 1, 0.3), Eigen::VectorXd::Zero(1));
    solver::SolverState s2 = solver::make_state(soft, Eigen::VectorXd::Constant(1, 1.0), c);
    s2.tol = 1e-8;
    CHECK(solver::gradient_phase(soft, s2, c) == solver::PhaseExit::below_tolerance);
    REQUIRE(s2.history.size() >= 4);
    CHECK(s2.history[0].t == 4.0);
    CHECK(s2.history[0].accepted);
    CHECK(s2.history[1].t == 16.0);
    CHECK(s2.history[2].t == 8.0);
    CHECK(run_checks::step_protocol(s2.history, c) == "");
  }

  TEST_CASE("gradient phase stalls when no step lowers the energy") {
    // Residual pointing uphill: E = y, f = -1.
    const solver::Objective uphill{[](const Eigen::VectorXd& y) {
                                     assembly::Evaluation e;
                                     e.energy.value = y[0];
                                     e.min_D = 1.0;
                                     e.residual = Eigen::VectorXd::Constant(1, -1.0);
                                     return e;
                                   },
                                   [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); }};
    solver::SolverConfig c;
    c.step_min = 1e-6;
    solver::SolverState s = solver::make_state(uphill, Eigen::VectorXd::Zero(1), c);
    CHECK(solver::gradient_phase(uphill, s, c) == solver::PhaseExit::stalled);
    CHECK(s.y[0] == 0.0);
    CHECK(s.t < c.step_min);
  }

  TEST_CASE("one quasi-Newton step solves a linear system") {
    // Powers of two keep every operation exact, so the t = 2 trial lands on
    // exactly -f and is rejected by the strict decrease test.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
    A.diagonal() << 2.0, 4.0, 8.0;
    const Eigen::VectorXd b(Eigen::Vector3d(1, -2, 4));
    const solver::Objective obj = quadratic(A, b);
    solver::SolverConfig c;
    solver::SolverState s = solver::make_state(obj, Eigen::VectorXd::Zero(3), c);
    CHECK(solver::quasi_newton_phase(obj, s, c) == solver::PhaseExit::converged);
    CHECK(s.quasi_newton_iterations == 1);
    CHECK((A * s.y - b).norm() == 0.0);
    // Trials 4 and 2 do not lower ||f|| (factors 3 and 1); t = 1 is exact.
    REQUIRE(s.history.size() == 3);
    CHECK(s.history[2].t == 1.0);
    CHECK(s.history[2].accepted);
  }

  TEST_CASE("full loop on a quadratic converges and keeps its invariants") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    A.diagonal() << 1.0, 10.0, 100.0, 1000.0;
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
    const solver::Objective obj = quadratic(A, b);
    solver::SolverConfig c;
    const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(4);
    const solver::SolveReport r = solver::solve(obj, y0, c);
    CHECK(r.success());
    CHECK(r.residual_norm < c.tol_final);
    CHECK(run_checks::run_invariants(r, c) == "");
  }

  TEST_CASE("singular Jacobian is reported") {
    CHECK_FALSE(solver::invert_jacobian(Eigen::MatrixXd::Zero(3, 3)).has_value());
    const auto inv = solver::invert_jacobian(Eigen::Matrix2d(Eigen::Vector2d(2, 4).asDiagonal()));
    REQUIRE(inv.has_value());
    CHECK((*inv)(1, 1) == doctest::Approx(0.25));
  }

  TEST_CASE("seeds") {
    const double eps = 0.05, gamma = 1.0, lambda = 2.0;
    const assembly::Discretization disc = fixtures::make_disc(eps, gamma, lambda, lambda, 4, 6);
    const model::BoundaryStretch st{lambda, lambda};
    SUBCASE("affine seed is P = lambda r") {
      const spectral::SpectralField f = disc.field(solver::initial_guess(disc, st, solver::SeedMode::affine));
      for (double rho : {-1.0, -0.2, 0.5, 1.0}) {
        CHECK(spectral::eval_field(f, rho, 0.3).P == doctest::Approx(lambda * disc.domain().rho_to_r(rho)));
      }
    }
    SUBCASE("incompressible seed interpolates the closed form") {
      const spectral::SpectralField f =
          disc.field(solver::initial_guess(disc, st, solver::SeedMode::incompressible));
      for (double rho : spectral::interpolation_radial_nodes(6)) {
        const double r = disc.domain().rho_to_r(rho);
        CHECK(spectral::eval_field(f, rho, 1.0).P ==
              doctest::Approx(std::sqrt(lambda * lambda * gamma * gamma + r * r - gamma * gamma)));
      }
    }
    SUBCASE("radial seed interpolates the 1-D reference profile") {
      const spectral::SpectralField f = disc.field(solver::initial_guess(disc, st, solver::SeedMode::radial));
      const oracle::RadialProfile p = oracle::radial_reference(eps, gamma, lambda, model::default_material(), 2000);
      for (double rho : spectral::interpolation_radial_nodes(6)) {
        const double r = std::clamp(disc.domain().rho_to_r(rho), eps, gamma);
        CHECK(spectral::eval_field(f, rho, 2.0).P == doctest::Approx(oracle::profile_value(p, r)).epsilon(1e-10));
      }
    }
    CHECK(solver::parse_seed_mode("affine") == solver::SeedMode::affine);
    CHECK_THROWS_AS((void)solver::parse_seed_mode("bogus"), std::invalid_argument);
  }

  TEST_CASE("polish lowers the residual of an oval seed") {
    const assembly::Discretization disc = fixtures::make_disc(0.05, 1.0, 2.4, 2.0, 4, 4);
    const model::BoundaryStretch st{2.4, 2.0};
    const assembly::UnknownVector y0 = solver::initial_guess(disc, st);
    const assembly::Evaluation e0 = disc.evaluate(y0);
    solver::PolishConfig pc;
    pc.target = 1e-6;
    const solver::PolishReport p = solver::polish_seed(disc, y0, pc);
    CHECK(p.applied);
    CHECK(p.residual_before == doctest::Approx(e0.residual.norm()));
    CHECK(p.residual_after < 1e-6);
    CHECK(disc.evaluate(p.y).energy.value < e0.energy.value);
    pc.max_iterations = 0;
    const solver::PolishReport none = solver::polish_seed(disc, y0, pc);
    CHECK(none.iterations == 0);
    CHECK(none.y == y0);
  }

  TEST_CASE("small symmetric solve converges, stays symmetric and is deterministic") {
    const assembly::Discretization disc = fixtures::make_disc(0.05, 1.0, 2.0, 2.0, 8, 8);
    const model::BoundaryStretch st{2.0, 2.0};
    const assembly::UnknownVector y0 = solver::initial_guess(disc, st, solver::SeedMode::incompressible);
    const assembly::Evaluation e0 = disc.evaluate(y0);
    solver::SolverConfig c;
    const solver::SolveReport r = solver::solve(disc, y0, c);
    REQUIRE(r.success());
    CHECK(run_checks::run_invariants(r, c) == "");
    CHECK(r.min_D_fine > 0.0);
    const spectral::SpectralField f = disc.field(r.y);
    double asym = f.beta.cwiseAbs().maxCoeff() + f.xi.cwiseAbs().maxCoeff() + f.eta.cwiseAbs().maxCoeff();
    asym = std::max(asym, f.alpha.bottomRows(f.alpha.rows() - 1).cwiseAbs().maxCoeff());
    CHECK(asym <= 1e-8);
    const solver::SolveReport again = solver::solve(disc, y0, c);
    CHECK(again.y == r.y);
    CHECK(again.energy == r.energy);
    CHECK(again.history.size() == r.history.size());
  }

  TEST_CASE("small oval solve converges") {
    const assembly::Discretization disc = fixtures::make_disc(0.05, 1.0, 2.4, 2.0, 8, 8);
    const model::BoundaryStretch st{2.4, 2.0};
    const solver::PolishReport p = solver::polish_seed(disc, solver::initial_guess(disc, st), {});
    const assembly::Evaluation e0 = disc.evaluate(p.y);
    solver::SolverConfig c;
    const solver::SolveReport r = solver::solve(disc, p.y, c);
    REQUIRE(r.success());
    CHECK(run_checks::run_invariants(r, c) == "");
    const spectral::SpectralField f = disc.field(r.y);
    // The oval solution is even under phi -> phi + pi: no odd modes.
    for (int k = 1; k < f.alpha.rows(); k += 2) CHECK(f.alpha.row(k).cwiseAbs().maxCoeff() <= 1e-8);
  }
}
