#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cavity::spectral {

/// Points further than this outside [-1, 1] are rejected by the Chebyshev
/// evaluators.
inline constexpr double kDomainSlack = 1e-12;

/// T_j(x) by the three-term recurrence.
[[nodiscard]] double chebyshev_eval(int degree, double x);

/// T_j'(x) = j U_{j-1}(x).
[[nodiscard]] double chebyshev_derivative(int degree, double x);

/// Fills values[j] = T_j(x) and slopes[j] = T_j'(x) for j = 0..values.size()-1.
/// Slopes come from the second-kind recurrence, so no division by sqrt(1-x^2)
/// is involved and the endpoints are handled exactly.
void chebyshev_table(double x, std::span<double> values, std::span<double> slopes);

/// Tensor product of a Gauss-Chebyshev rule on (-1, 1) and the uniform
/// trapezoidal rule on [0, 2pi).
struct QuadratureRule {
  std::vector<double> chebyshev_nodes;
  std::vector<double> chebyshev_weights;
  std::vector<double> fourier_nodes;
  std::vector<double> fourier_weights;

  [[nodiscard]] int radial_count() const { return static_cast<int>(chebyshev_nodes.size()); }
  [[nodiscard]] int angular_count() const { return static_cast<int>(fourier_nodes.size()); }
};

/// Nodes cos((2m+1)pi/(2M'+2)), m = 0..M', all weights pi/(M'+1). Exact for
/// int f(x) (1-x^2)^{-1/2} dx when f has degree <= 2M'+1.
[[nodiscard]] QuadratureRule gauss_chebyshev_rule(int radial_max_index);

/// Nodes 2 pi n / N', weights 2 pi / N'.
[[nodiscard]] QuadratureRule fourier_rule(int angular_count);

/// Product rule with M'+1 radial and N' angular nodes.
[[nodiscard]] QuadratureRule product_rule(int angular_count, int radial_max_index);

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on (-1, 1) from the Jacobi matrix eigenproblem.
[[nodiscard]] GaussLegendre gauss_legendre(int n);

/// Coefficients of the truncated Fourier-Chebyshev pair (P, Q).
///
/// Row k of `alpha`/`xi` holds the cos(k phi) coefficients for k = 0..N/2.
/// Row k-1 of `beta`/`eta` holds the sin(k phi) coefficients for
/// k = 1..N/2-1. Column j is the Chebyshev degree, j = 0..M.
struct SpectralField {
  int N = 0;
  int M = 0;
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd xi;
  Eigen::MatrixXd eta;

  SpectralField() = default;
  /// Zero field. Throws std::invalid_argument unless N is even and positive
  /// and M >= 0.
  SpectralField(int N, int M);

  [[nodiscard]] int cosine_modes() const { return N / 2 + 1; }
  [[nodiscard]] int sine_modes() const { return N / 2 - 1; }
};

/// Pointwise values and first partials of (P, Q).
struct FieldJet {
  double P = 0.0;
  double Q = 0.0;
  double P_rho = 0.0;
  double P_phi = 0.0;
  double Q_rho = 0.0;
  double Q_phi = 0.0;
};

[[nodiscard]] FieldJet eval_field(const SpectralField& field, double rho, double phi);

/// Jets on a tensor grid, stored as Nq x (Mq+1) matrices (row = angular node).
struct FieldGrid {
  Eigen::MatrixXd P, Q, P_rho, P_phi, Q_rho, Q_phi;

  [[nodiscard]] FieldJet at(int angular, int radial) const {
    return {P(angular, radial),     Q(angular, radial),     P_rho(angular, radial),
            P_phi(angular, radial), Q_rho(angular, radial), Q_phi(angular, radial)};
  }
};

/// Basis tables for one (N, M, rule) combination. Evaluation on the grid is
/// two dense products per quantity: angular synthesis, then radial.
class GridBasis {
 public:
  GridBasis(int N, int M, const QuadratureRule& rule);

  [[nodiscard]] FieldGrid evaluate(const SpectralField& field) const;

  [[nodiscard]] int N() const { return N_; }
  [[nodiscard]] int M() const { return M_; }
  [[nodiscard]] const QuadratureRule& rule() const { return rule_; }

  // Angular tables, Nq x modes.
  [[nodiscard]] const Eigen::MatrixXd& cos_table() const { return cos_; }
  [[nodiscard]] const Eigen::MatrixXd& sin_table() const { return sin_; }
  [[nodiscard]] const Eigen::MatrixXd& cos_slope_table() const { return dcos_; }
  [[nodiscard]] const Eigen::MatrixXd& sin_slope_table() const { return dsin_; }
  // Radial tables, (M+1) x (Mq+1).
  [[nodiscard]] const Eigen::MatrixXd& cheb_table() const { return cheb_; }
  [[nodiscard]] const Eigen::MatrixXd& cheb_slope_table() const { return dcheb_; }

 private:
  int N_;
  int M_;
  QuadratureRule rule_;
  Eigen::MatrixXd cos_, sin_, dcos_, dsin_;
  Eigen::MatrixXd cheb_, dcheb_;
};

[[nodiscard]] FieldGrid eval_field_grid(const SpectralField& field, const QuadratureRule& rule);

/// Chebyshev extrema cos(m pi / M), m = 0..M.
[[nodiscard]] std::vector<double> interpolation_radial_nodes(int M);
/// 2 pi n / N, n = 0..N-1.
[[nodiscard]] std::vector<double> interpolation_angular_nodes(int N);

/// Samples on the interpolation grid, (M+1) x N (row = radial node).
using SampleGrid = Eigen::MatrixXd;

/// The interpolant that reproduces the samples at every (cos(m pi/M), 2 pi n/N).
[[nodiscard]] SpectralField interpolate(const SampleGrid& P_samples, const SampleGrid& Q_samples,
                                        int N, int M);

/// Discrete Fourier coefficients of N equispaced samples.
struct FourierCoefficients {
  std::vector<double> cosine;  ///< k = 0..N/2
  std::vector<double> sine;    ///< k = 1..N/2-1, stored at index k-1

  [[nodiscard]] double synthesize(double phi) const;
};

[[nodiscard]] FourierCoefficients discrete_fourier(std::span<const double> samples);

}  // namespace cavity::spectral
