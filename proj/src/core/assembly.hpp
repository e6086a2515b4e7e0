#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "model.hpp"
#include "spectral.hpp"

namespace cavity::assembly {

using UnknownVector = Eigen::VectorXd;

/// Packing of the 2NM free coefficients (Chebyshev degrees j = 1..M).
///
/// Blocks in order alpha, beta, xi, eta; inside a block the mode index k is
/// major and j minor. alpha/xi carry k = 0..N/2, beta/eta k = 1..N/2-1.
class Layout {
 public:
  Layout(int N, int M);

  [[nodiscard]] int N() const { return N_; }
  [[nodiscard]] int M() const { return M_; }
  [[nodiscard]] int size() const { return 2 * N_ * M_; }
  [[nodiscard]] int cosine_modes() const { return N_ / 2 + 1; }
  [[nodiscard]] int sine_modes() const { return N_ / 2 - 1; }

  [[nodiscard]] int alpha(int k, int j) const { return k * M_ + (j - 1); }
  [[nodiscard]] int beta(int k, int j) const { return beta_offset_ + (k - 1) * M_ + (j - 1); }
  [[nodiscard]] int xi(int k, int j) const { return xi_offset_ + k * M_ + (j - 1); }
  [[nodiscard]] int eta(int k, int j) const { return eta_offset_ + (k - 1) * M_ + (j - 1); }

 private:
  int N_;
  int M_;
  int beta_offset_;
  int xi_offset_;
  int eta_offset_;
};

/// Discrete Fourier coefficients of the boundary values P0(1, phi) and
/// Q0(1, phi): a/b from P0, c/d from Q0.
struct BoundaryData {
  spectral::FourierCoefficients radius;
  spectral::FourierCoefficients angle;

  [[nodiscard]] int N() const { return static_cast<int>(radius.cosine.size() - 1) * 2; }
};

[[nodiscard]] BoundaryData boundary_fourier_coeffs(std::span<const double> P0_samples,
                                                   std::span<const double> Q0_samples);
/// Samples the stretch at phi_n = 2 pi n / N and transforms.
[[nodiscard]] BoundaryData boundary_data(const model::BoundaryStretch& stretch, double gamma, int N);

/// Free coefficients plus eliminated j = 0 column, so the field matches the
/// boundary samples at rho = 1.
[[nodiscard]] spectral::SpectralField assemble_field(const UnknownVector& y, const BoundaryData& bc,
                                                     int M);
/// The j >= 1 columns of a field in packing order.
[[nodiscard]] UnknownVector free_coefficients(const spectral::SpectralField& field);

struct NodeIndex {
  int angular = 0;
  int radial = 0;
};

/// Energy, or +inf plus the first node where D <= 0.
struct EnergyValue {
  double value = 0.0;
  std::optional<NodeIndex> inadmissible;

  [[nodiscard]] bool admissible() const { return !inadmissible.has_value(); }
};

/// Result of one pass over the quadrature grid.
struct Evaluation {
  EnergyValue energy;
  double min_D = 0.0;
  Eigen::VectorXd residual;  ///< empty when inadmissible or not requested

  [[nodiscard]] bool admissible() const { return energy.admissible(); }
};

/// Fixed problem data plus precomputed basis tables.
class Discretization {
 public:
  Discretization(int N, int M, const spectral::QuadratureRule& rule, model::AnnulusDomain domain,
                 model::MaterialModel material, BoundaryData bc);

  [[nodiscard]] const Layout& layout() const { return layout_; }
  [[nodiscard]] const spectral::GridBasis& basis() const { return basis_; }
  [[nodiscard]] const model::AnnulusDomain& domain() const { return domain_; }
  [[nodiscard]] const model::MaterialModel& material() const { return material_; }
  [[nodiscard]] const BoundaryData& boundary() const { return bc_; }
  [[nodiscard]] const spectral::QuadratureRule& rule() const { return basis_.rule(); }

  [[nodiscard]] spectral::SpectralField field(const UnknownVector& y) const;

  /// Energy and (optionally) residual in a single node-major pass.
  [[nodiscard]] Evaluation evaluate(const UnknownVector& y, bool with_residual = true) const;

 private:
  Layout layout_;
  spectral::GridBasis basis_;
  model::AnnulusDomain domain_;
  model::MaterialModel material_;
  BoundaryData bc_;
  Eigen::VectorXd radius_;   // r at each radial node
  Eigen::MatrixXd weight_;   // sqrt(1-rho^2) wC wF, Nq x (Mq+1)
  Eigen::MatrixXd test_;     // (T_j - 1)^T, (Mq+1) x M
  Eigen::MatrixXd test_rho_; // T_j'^T, (Mq+1) x M
};

/// Quadrature approximation of the elastic energy.
[[nodiscard]] EnergyValue discrete_energy(const Discretization& disc, const UnknownVector& y);

/// Discrete Euler-Lagrange residual; std::nullopt when some node has D <= 0.
[[nodiscard]] std::optional<Eigen::VectorXd> residual(const Discretization& disc,
                                                      const UnknownVector& y);

/// Radial rule for plain d(rho) integrands: composite Gauss-Legendre on panels
/// graded geometrically in r, with the weights divided by sqrt(1 - rho^2) so
/// that a Discretization built on it integrates the energy density directly.
/// Converges much faster than Gauss-Chebyshev near a small cavity.
[[nodiscard]] spectral::QuadratureRule resolved_rule(const model::AnnulusDomain& domain,
                                                     int angular_count, int panels = 48,
                                                     int order = 16);

/// Elastic energy of the field y describes, integrated with resolved_rule
/// (angular count max(4N, N')). +inf when D <= 0 on that grid.
[[nodiscard]] double resolved_energy(const Discretization& disc, const UnknownVector& y);

/// Central-difference Jacobian of the residual with column steps
/// 1e-10 max(1, |y_j|). Falls back to a one-sided difference when one probe
/// is inadmissible, then to steps shortened by 4x (up to 11 times).
/// Throws std::domain_error if y itself or every probe is inadmissible.
[[nodiscard]] Eigen::MatrixXd jacobian_fd(const Discretization& disc, const UnknownVector& y);

}  // namespace cavity::assembly
