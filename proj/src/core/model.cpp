#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cavity::model {

namespace {

const double kHScale = std::pow(2.0, -0.25);

void require_positive(double t, const char* what) {
  if (!(t > 0.0)) throw std::domain_error(std::string(what) + ": argument must be positive");
}

}  // namespace

double h_default(double t) {
  require_positive(t, "h");
  return kHScale * (0.5 * (t - 1.0) * (t - 1.0) + 1.0 / t);
}

double h_default_prime(double t) {
  require_positive(t, "h'");
  return kHScale * ((t - 1.0) - 1.0 / (t * t));
}

MaterialModel default_material() { return default_material(1.5, 2.0 / 3.0); }

MaterialModel default_material(double p, double kappa) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("material exponent p must lie in (1, 2)");
  if (!(kappa > 0.0)) throw std::invalid_argument("material modulus kappa must be positive");
  MaterialModel mat;
  mat.tag = "default";
  mat.p = p;
  mat.kappa = kappa;
  mat.h = h_default;
  mat.h_prime = h_default_prime;
  return mat;
}

double g_eval(const MaterialModel& mat, double t) {
  require_positive(t, "g");
  return mat.kappa * std::pow(2.0 * t, 0.5 * mat.p);
}

double g_prime(const MaterialModel& mat, double t) {
  require_positive(t, "g'");
  return mat.kappa * mat.p * std::pow(2.0 * t, 0.5 * mat.p - 1.0);
}

AnnulusDomain::AnnulusDomain(double eps, double gamma) : eps_(eps), gamma_(gamma) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(gamma <= 1.0)) throw std::invalid_argument("gamma must not exceed 1");
  if (!(eps < gamma)) throw std::invalid_argument("eps must be smaller than gamma");
}

double BoundaryStretch::mean() const { return std::sqrt(lambda1 * lambda2); }

double BoundaryStretch::radius(double gamma, double phi) const {
  const double x = lambda1 * std::cos(phi);
  const double y = lambda2 * std::sin(phi);
  return gamma * std::hypot(x, y);
}

double BoundaryStretch::angle_offset(double phi) const {
  // Rotate (lambda1 cos, lambda2 sin) back by phi; the first component stays
  // positive, so atan2 never wraps.
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double along = lambda1 * c * c + lambda2 * s * s;
  const double across = (lambda2 - lambda1) * s * c;
  return std::atan2(across, along);
}

Kinematics kinematics(const spectral::FieldJet& jet, const AnnulusDomain& domain, double rho) {
  const double r = domain.rho_to_r(rho);
  if (!(r > 0.0)) throw std::domain_error("kinematics: non-positive radius");
  const double rr = domain.rho_r();
  const double qp = jet.Q_phi + 1.0;
  Kinematics k;
  k.D = rr / r * jet.P * (jet.P_rho * qp - jet.P_phi * jet.Q_rho);
  k.F = 0.5 * rr * rr * (jet.P_rho * jet.P_rho + jet.P * jet.P * jet.Q_rho * jet.Q_rho) +
        0.5 / (r * r) * (jet.P_phi * jet.P_phi + jet.P * jet.P * qp * qp);
  return k;
}

H2Diagnostics h2_diagnostics(const spectral::SpectralField& field, const AnnulusDomain& domain,
                             const spectral::QuadratureRule& rule) {
  const spectral::FieldGrid grid = spectral::eval_field_grid(field, rule);
  constexpr double inf = std::numeric_limits<double>::infinity();
  H2Diagnostics out{inf, -inf, inf, -inf};
  for (int n = 0; n < rule.angular_count(); ++n) {
    for (int m = 0; m < rule.radial_count(); ++m) {
      const double rho = rule.chebyshev_nodes[m];
      const double r = domain.rho_to_r(rho);
      const Kinematics k = kinematics(grid.at(n, m), domain, rho);
      const double f = 2.0 * r * r * k.F;
      out.min_D = std::min(out.min_D, k.D);
      out.max_D = std::max(out.max_D, k.D);
      out.min_2r2F = std::min(out.min_2r2F, f);
      out.max_2r2F = std::max(out.max_2r2F, f);
    }
  }
  return out;
}

}  // namespace cavity::model
