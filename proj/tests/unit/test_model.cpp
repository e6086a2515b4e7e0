#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "model.hpp"

using namespace cavity;
using std::numbers::pi;

TEST_SUITE("model") {
  TEST_CASE("default material matches its closed forms") {
    const model::MaterialModel mat = model::default_material();
    CHECK(mat.p == 1.5);
    CHECK(mat.kappa == doctest::Approx(2.0 / 3.0));
    const double c = std::pow(2.0, -0.25);
    CHECK(mat.h(1.0) == doctest::Approx(c));
    CHECK(mat.h(2.0) == doctest::Approx(c * (0.5 + 0.5)));
    CHECK(mat.h_prime(1.0) == doctest::Approx(-c));
    for (double t : {0.3, 1.0, 1.7, 4.0}) {
      const double fd = (mat.h(t + 1e-6) - mat.h(t - 1e-6)) / 2e-6;
      CHECK(mat.h_prime(t) == doctest::Approx(fd).epsilon(1e-7));
      const double gfd = (model::g_eval(mat, t + 1e-6) - model::g_eval(mat, t - 1e-6)) / 2e-6;
      CHECK(model::g_prime(mat, t) == doctest::Approx(gfd).epsilon(1e-7));
    }
    // g(F) with F = |A|^2/2 is kappa |A|^p.
    CHECK(model::g_eval(mat, 0.5 * 8.0) == doctest::Approx(mat.kappa * std::pow(8.0, 0.75)));
    CHECK_THROWS_AS((void)mat.h(0.0), std::domain_error);
    CHECK_THROWS_AS((void)model::default_material(2.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)model::default_material(1.5, 0.0), std::invalid_argument);
  }

  TEST_CASE("annulus map") {
    const model::AnnulusDomain d(1e-3, 1.0);
    CHECK(d.rho_to_r(-1.0) == doctest::Approx(1e-3));
    CHECK(d.rho_to_r(1.0) == doctest::Approx(1.0));
    CHECK(d.r_to_rho(d.rho_to_r(0.37)) == doctest::Approx(0.37));
    CHECK(d.rho_r() == doctest::Approx(2.0 / 0.999));
    CHECK_THROWS(model::AnnulusDomain(1.0, 0.5));
    CHECK_THROWS(model::AnnulusDomain(0.0, 1.0));
  }

  TEST_CASE("boundary stretch in polar form") {
    const model::BoundaryStretch s{2.4, 2.0};
    CHECK(s.mean() == doctest::Approx(std::sqrt(4.8)));
    for (double phi = 0.0; phi < 2 * pi; phi += 0.37) {
      const double x = 2.4 * std::cos(phi), y = 2.0 * std::sin(phi);
      CHECK(s.radius(1.0, phi) == doctest::Approx(std::hypot(x, y)));
      const double theta = phi + s.angle_offset(phi);
      CHECK(std::cos(theta) == doctest::Approx(x / std::hypot(x, y)));
      CHECK(std::sin(theta) == doctest::Approx(y / std::hypot(x, y)));
      CHECK(std::abs(s.angle_offset(phi)) < pi / 2);
    }
    CHECK(model::BoundaryStretch{2.0, 2.0}.angle_offset(0.8) == doctest::Approx(0.0));
  }

  TEST_CASE("kinematics of an affine map") {
    // u = (l1 x1, l2 x2): det = l1 l2 and |A|^2 = l1^2 + l2^2 everywhere.
    const model::AnnulusDomain dom(0.1, 1.0);
    const model::BoundaryStretch s{2.4, 2.0};
    for (double rho : {-0.9, 0.0, 0.6}) {
      for (double phi : {0.0, 0.7, 2.0, 4.4}) {
        const double r = dom.rho_to_r(rho);
        const double h = 1e-6;
        spectral::FieldJet jet;
        jet.P = r * s.radius(1.0, phi);
        jet.Q = s.angle_offset(phi);
        jet.P_rho = s.radius(1.0, phi) / dom.rho_r();
        jet.P_phi = r * (s.radius(1.0, phi + h) - s.radius(1.0, phi - h)) / (2 * h);
        jet.Q_rho = 0.0;
        jet.Q_phi = (s.angle_offset(phi + h) - s.angle_offset(phi - h)) / (2 * h);
        const model::Kinematics k = model::kinematics(jet, dom, rho);
        CHECK(k.D == doctest::Approx(4.8).epsilon(1e-8));
        CHECK(k.F == doctest::Approx(0.5 * (2.4 * 2.4 + 4.0)).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("D and F are invariant under rotations of the deformed body") {
    // A rigid rotation adds a constant to Q and leaves every derivative alone.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const model::AnnulusDomain dom(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      spectral::FieldJet jet{1.5 + 0.2 * u(rng), 0.3 * u(rng), 0.6 + 0.1 * u(rng),
                             0.2 * u(rng),       0.2 * u(rng), 0.1 * u(rng)};
      const double rho = 0.9 * u(rng);
      const model::Kinematics a = model::kinematics(jet, dom, rho);
      jet.Q += 2.0 * u(rng);
      const model::Kinematics b = model::kinematics(jet, dom, rho);
      CHECK(a.D == b.D);
      CHECK(a.F == b.F);
    }
  }

  TEST_CASE("D and F agree with the Cartesian deformation gradient") {
    // u(r, theta) = P (cos(theta + Q), sin(theta + Q)); differentiate numerically in x.
    const model::AnnulusDomain dom(0.1, 1.0);
    auto P = [](double r, double t) { return 1.2 * r + 0.3 + 0.05 * r * std::cos(2 * t); };
    auto Q = [](double r, double t) { return 0.1 * r * std::sin(t); };
    auto u = [&](double x, double y) {
      const double r = std::hypot(x, y), t = std::atan2(y, x);
      return std::array<double, 2>{P(r, t) * std::cos(t + Q(r, t)), P(r, t) * std::sin(t + Q(r, t))};
    };
    const double r = 0.55, t = 0.8, h = 1e-6;
    const double x = r * std::cos(t), y = r * std::sin(t);
    const auto ux1 = u(x + h, y), ux0 = u(x - h, y), uy1 = u(x, y + h), uy0 = u(x, y - h);
    const double a11 = (ux1[0] - ux0[0]) / (2 * h), a21 = (ux1[1] - ux0[1]) / (2 * h);
    const double a12 = (uy1[0] - uy0[0]) / (2 * h), a22 = (uy1[1] - uy0[1]) / (2 * h);
    spectral::FieldJet jet;
    jet.P = P(r, t);
    jet.Q = Q(r, t);
    jet.P_rho = (P(r + h, t) - P(r - h, t)) / (2 * h) / dom.rho_r();
    jet.Q_rho = (Q(r + h, t) - Q(r - h, t)) / (2 * h) / dom.rho_r();
    jet.P_phi = (P(r, t + h) - P(r, t - h)) / (2 * h);
    jet.Q_phi = (Q(r, t + h) - Q(r, t - h)) / (2 * h);
    const model::Kinematics k = model::kinematics(jet, dom, dom.r_to_rho(r));
    CHECK(k.D == doctest::Approx(a11 * a22 - a12 * a21).epsilon(1e-7));
    CHECK(k.F == doctest::Approx(0.5 * (a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22)).epsilon(1e-7));
  }
}
