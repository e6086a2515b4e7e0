#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spectral.hpp"

namespace cavity::model {

/// Stored energy W(A) = kappa |A|^p + h(det A), written as g(F) + h(D) with
/// F = |A|^2 / 2 and g(t) = kappa (2t)^{p/2}.
struct MaterialModel {
  std::string tag = "default";
  double p = 1.5;
  double kappa = 2.0 / 3.0;
  std::function<double(double)> h;
  std::function<double(double)> h_prime;
};

/// p = 3/2, kappa = 2/3, h(t) = 2^{-1/4} ((t-1)^2/2 + 1/t).
[[nodiscard]] MaterialModel default_material();
/// Same volumetric part with a different growth exponent / modulus.
/// Throws std::invalid_argument unless 1 < p < 2 and kappa > 0.
[[nodiscard]] MaterialModel default_material(double p, double kappa);

[[nodiscard]] double h_default(double t);
[[nodiscard]] double h_default_prime(double t);

[[nodiscard]] double g_eval(const MaterialModel& mat, double t);
[[nodiscard]] double g_prime(const MaterialModel& mat, double t);

/// Annulus eps < |x| < gamma mapped affinely onto rho in (-1, 1).
class AnnulusDomain {
 public:
  AnnulusDomain(double eps, double gamma);

  [[nodiscard]] double eps() const { return eps_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  /// d rho / d r = 2 / (gamma - eps).
  [[nodiscard]] double rho_r() const { return 2.0 / (gamma_ - eps_); }
  [[nodiscard]] double rho_to_r(double rho) const {
    return 0.5 * (gamma_ + eps_) + 0.5 * (gamma_ - eps_) * rho;
  }
  [[nodiscard]] double r_to_rho(double r) const { return (2.0 * r - gamma_ - eps_) / (gamma_ - eps_); }

 private:
  double eps_;
  double gamma_;
};

/// Boundary map u0(x) = (lambda1 x1, lambda2 x2) on |x| = gamma.
struct BoundaryStretch {
  double lambda1 = 2.0;
  double lambda2 = 2.0;

  [[nodiscard]] bool symmetric() const { return lambda1 == lambda2; }
  /// Geometric mean, used for radially symmetric seeds.
  [[nodiscard]] double mean() const;
  /// Deformed radius P0 at angle phi.
  [[nodiscard]] double radius(double gamma, double phi) const;
  /// Angular offset Q0 = Theta - phi at angle phi; always in (-pi/2, pi/2).
  [[nodiscard]] double angle_offset(double phi) const;
};

struct Kinematics {
  double D = 0.0;  ///< det of the deformation gradient
  double F = 0.0;  ///< half the squared Frobenius norm
};

[[nodiscard]] Kinematics kinematics(const spectral::FieldJet& jet, const AnnulusDomain& domain,
                                    double rho);

struct H2Diagnostics {
  double min_D = 0.0;
  double max_D = 0.0;
  double min_2r2F = 0.0;
  double max_2r2F = 0.0;
};

/// Extrema of D and 2 r^2 F over the quadrature grid.
[[nodiscard]] H2Diagnostics h2_diagnostics(const spectral::SpectralField& field,
                                           const AnnulusDomain& domain,
                                           const spectral::QuadratureRule& rule);

}  // namespace cavity::model
