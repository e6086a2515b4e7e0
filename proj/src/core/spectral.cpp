#include "spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cavity::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

void check_point(double x) {
  if (!(std::abs(x) <= 1.0 + kDomainSlack)) {
    throw std::domain_error("Chebyshev argument outside [-1, 1]: " + std::to_string(x));
  }
}

void check_degree(int degree) {
  if (degree < 0) throw std::invalid_argument("Chebyshev degree must be non-negative");
}

}  // namespace

double chebyshev_eval(int degree, double x) {
  check_degree(degree);
  check_point(x);
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int j = 1; j < degree; ++j) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double chebyshev_derivative(int degree, double x) {
  check_degree(degree);
  check_point(x);
  if (degree == 0) return 0.0;
  // U_{degree-1}
  double prev = 1.0;
  double cur = 2.0 * x;
  if (degree == 1) return 1.0;
  for (int j = 1; j < degree - 1; ++j) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return degree * cur;
}

void chebyshev_table(double x, std::span<double> values, std::span<double> slopes) {
  check_point(x);
  if (values.size() != slopes.size()) {
    throw std::invalid_argument("chebyshev_table: span sizes differ");
  }
  const std::size_t n = values.size();
  if (n == 0) return;
  values[0] = 1.0;
  slopes[0] = 0.0;
  if (n == 1) return;
  values[1] = x;
  slopes[1] = 1.0;
  double u_prev = 1.0;     // U_0
  double u_cur = 2.0 * x;  // U_1
  for (std::size_t j = 2; j < n; ++j) {
    values[j] = 2.0 * x * values[j - 1] - values[j - 2];
    slopes[j] = static_cast<double>(j) * u_cur;
    const double u_next = 2.0 * x * u_cur - u_prev;
    u_prev = u_cur;
    u_cur = u_next;
  }
}

QuadratureRule gauss_chebyshev_rule(int radial_max_index) {
  if (radial_max_index < 0) throw std::invalid_argument("M' must be non-negative");
  QuadratureRule rule;
  const int count = radial_max_index + 1;
  rule.chebyshev_nodes.resize(count);
  rule.chebyshev_weights.assign(count, kPi / count);
  for (int m = 0; m < count; ++m) {
    rule.chebyshev_nodes[m] = std::cos((2.0 * m + 1.0) * kPi / (2.0 * count));
  }
  // cos(pi/2) is not exactly zero in floating point.
  if (count % 2 == 1) rule.chebyshev_nodes[count / 2] = 0.0;
  return rule;
}

QuadratureRule fourier_rule(int angular_count) {
  if (angular_count < 1) throw std::invalid_argument("N' must be positive");
  QuadratureRule rule;
  rule.fourier_nodes.resize(angular_count);
  rule.fourier_weights.assign(angular_count, 2.0 * kPi / angular_count);
  for (int n = 0; n < angular_count; ++n) {
    rule.fourier_nodes[n] = 2.0 * kPi * n / angular_count;
  }
  return rule;
}

QuadratureRule product_rule(int angular_count, int radial_max_index) {
  QuadratureRule rule = gauss_chebyshev_rule(radial_max_index);
  QuadratureRule angular = fourier_rule(angular_count);
  rule.fourier_nodes = std::move(angular.fourier_nodes);
  rule.fourier_weights = std::move(angular.fourier_weights);
  return rule;
}

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()[i];
    const double v = eig.eigenvectors()(0, i);
    rule.weights[i] = 2.0 * v * v;
  }
  return rule;
}

SpectralField::SpectralField(int N_, int M_) : N(N_), M(M_) {
  if (N <= 0 || N % 2 != 0) throw std::invalid_argument("N must be even and positive");
  if (M < 0) throw std::invalid_argument("M must be non-negative");
  alpha = Eigen::MatrixXd::Zero(cosine_modes(), M + 1);
  xi = Eigen::MatrixXd::Zero(cosine_modes(), M + 1);
  beta = Eigen::MatrixXd::Zero(sine_modes(), M + 1);
  eta = Eigen::MatrixXd::Zero(sine_modes(), M + 1);
}

FieldJet eval_field(const SpectralField& field, double rho, double phi) {
  std::vector<double> T(field.M + 1), dT(field.M + 1);
  chebyshev_table(rho, T, dT);

  FieldJet jet;
  for (int k = 0; k < field.cosine_modes(); ++k) {
    const double c = std::cos(k * phi);
    const double s = std::sin(k * phi);
    for (int j = 0; j <= field.M; ++j) {
      const double a = field.alpha(k, j);
      const double x = field.xi(k, j);
      jet.P += a * c * T[j];
      jet.P_rho += a * c * dT[j];
      jet.P_phi -= a * k * s * T[j];
      jet.Q += x * c * T[j];
      jet.Q_rho += x * c * dT[j];
      jet.Q_phi -= x * k * s * T[j];
    }
  }
  for (int k = 1; k <= field.sine_modes(); ++k) {
    const double c = std::cos(k * phi);
    const double s = std::sin(k * phi);
    for (int j = 0; j <= field.M; ++j) {
      const double b = field.beta(k - 1, j);
      const double e = field.eta(k - 1, j);
      jet.P += b * s * T[j];
      jet.P_rho += b * s * dT[j];
      jet.P_phi += b * k * c * T[j];
      jet.Q += e * s * T[j];
      jet.Q_rho += e * s * dT[j];
      jet.Q_phi += e * k * c * T[j];
    }
  }
  return jet;
}

GridBasis::GridBasis(int N, int M, const QuadratureRule& rule) : N_(N), M_(M), rule_(rule) {
  if (N <= 0 || N % 2 != 0) throw std::invalid_argument("N must be even and positive");
  if (M < 0) throw std::invalid_argument("M must be non-negative");
  const int nq = rule.angular_count();
  const int mq = rule.radial_count();
  const int nc = N / 2 + 1;
  const int ns = N / 2 - 1;

  cos_.resize(nq, nc);
  dcos_.resize(nq, nc);
  sin_.resize(nq, ns);
  dsin_.resize(nq, ns);
  for (int n = 0; n < nq; ++n) {
    const double phi = rule.fourier_nodes[n];
    for (int k = 0; k < nc; ++k) {
      cos_(n, k) = std::cos(k * phi);
      dcos_(n, k) = -k * std::sin(k * phi);
    }
    for (int k = 1; k <= ns; ++k) {
      sin_(n, k - 1) = std::sin(k * phi);
      dsin_(n, k - 1) = k * std::cos(k * phi);
    }
  }

  cheb_.resize(M + 1, mq);
  dcheb_.resize(M + 1, mq);
  std::vector<double> T(M + 1), dT(M + 1);
  for (int m = 0; m < mq; ++m) {
    chebyshev_table(rule.chebyshev_nodes[m], T, dT);
    for (int j = 0; j <= M; ++j) {
      cheb_(j, m) = T[j];
      dcheb_(j, m) = dT[j];
    }
  }
}

FieldGrid GridBasis::evaluate(const SpectralField& field) const {
  if (field.N != N_ || field.M != M_) {
    throw std::invalid_argument("GridBasis::evaluate: field resolution mismatch");
  }
  const Eigen::MatrixXd A = cos_ * field.alpha + sin_ * field.beta;
  const Eigen::MatrixXd A_phi = dcos_ * field.alpha + dsin_ * field.beta;
  const Eigen::MatrixXd X = cos_ * field.xi + sin_ * field.eta;
  const Eigen::MatrixXd X_phi = dcos_ * field.xi + dsin_ * field.eta;

  FieldGrid grid;
  grid.P.noalias() = A * cheb_;
  grid.P_rho.noalias() = A * dcheb_;
  grid.P_phi.noalias() = A_phi * cheb_;
  grid.Q.noalias() = X * cheb_;
  grid.Q_rho.noalias() = X * dcheb_;
  grid.Q_phi.noalias() = X_phi * cheb_;
  return grid;
}

FieldGrid eval_field_grid(const SpectralField& field, const QuadratureRule& rule) {
  return GridBasis(field.N, field.M, rule).evaluate(field);
}

std::vector<double> interpolation_radial_nodes(int M) {
  if (M < 1) throw std::invalid_argument("interpolation needs M >= 1");
  std::vector<double> nodes(M + 1);
  for (int m = 0; m <= M; ++m) nodes[m] = std::cos(m * kPi / M);
  if (M % 2 == 0) nodes[M / 2] = 0.0;
  return nodes;
}

std::vector<double> interpolation_angular_nodes(int N) {
  if (N < 1) throw std::invalid_argument("interpolation needs N >= 1");
  std::vector<double> nodes(N);
  for (int n = 0; n < N; ++n) nodes[n] = 2.0 * kPi * n / N;
  return nodes;
}

FourierCoefficients discrete_fourier(std::span<const double> samples) {
  const int N = static_cast<int>(samples.size());
  if (N <= 0 || N % 2 != 0) {
    throw std::invalid_argument("discrete_fourier: sample count must be even and positive");
  }
  FourierCoefficients out;
  out.cosine.assign(N / 2 + 1, 0.0);
  out.sine.assign(N / 2 - 1, 0.0);
  for (int k = 0; k <= N / 2; ++k) {
    double c = 0.0;
    double s = 0.0;
    for (int n = 0; n < N; ++n) {
      // Reduce k*n mod N so the angle stays small and the table is exact at
      // the symmetric points.
      const double angle = 2.0 * kPi * ((static_cast<long>(k) * n) % N) / N;
      c += samples[n] * std::cos(angle);
      s += samples[n] * std::sin(angle);
    }
    const double scale = (k == 0 || k == N / 2) ? 1.0 / N : 2.0 / N;
    out.cosine[k] = scale * c;
    if (k >= 1 && k < N / 2) out.sine[k - 1] = scale * s;
  }
  return out;
}

double FourierCoefficients::synthesize(double phi) const {
  double value = 0.0;
  for (std::size_t k = 0; k < cosine.size(); ++k) value += cosine[k] * std::cos(k * phi);
  for (std::size_t k = 1; k <= sine.size(); ++k) value += sine[k - 1] * std::sin(k * phi);
  return value;
}

SpectralField interpolate(const SampleGrid& P_samples, const SampleGrid& Q_samples, int N, int M) {
  if (N <= 0 || N % 2 != 0) throw std::invalid_argument("interpolate: N must be even and positive");
  if (M < 1) throw std::invalid_argument("interpolate: M must be at least 1");
  for (const SampleGrid* s : {&P_samples, &Q_samples}) {
    if (s->rows() != M + 1 || s->cols() != N) {
      throw std::invalid_argument("interpolate: sample grid must be (M+1) x N, got " +
                                  std::to_string(s->rows()) + " x " + std::to_string(s->cols()));
    }
  }

  // Angular transform at each radial node, then a discrete Chebyshev
  // transform on the extrema grid for each Fourier mode.
  const std::vector<double> rho = interpolation_radial_nodes(M);
  Eigen::MatrixXd cheb(M + 1, M + 1);  // cheb(j, m) = T_j(rho_m)
  for (int m = 0; m <= M; ++m) {
    for (int j = 0; j <= M; ++j) {
      // T_j(cos(m pi/M)) = cos(j m pi / M); reduce the angle for accuracy.
      cheb(j, m) = std::cos(kPi * ((static_cast<long>(j) * m) % (2 * M)) / M);
    }
  }

  auto transform = [&](const SampleGrid& samples, Eigen::MatrixXd& cos_out, Eigen::MatrixXd& sin_out) {
    Eigen::MatrixXd cos_modes(N / 2 + 1, M + 1);
    Eigen::MatrixXd sin_modes(N / 2 - 1, M + 1);
    std::vector<double> row(N);
    for (int m = 0; m <= M; ++m) {
      for (int n = 0; n < N; ++n) row[n] = samples(m, n);
      const FourierCoefficients fc = discrete_fourier(row);
      for (int k = 0; k <= N / 2; ++k) cos_modes(k, m) = fc.cosine[k];
      for (int k = 1; k < N / 2; ++k) sin_modes(k - 1, m) = fc.sine[k - 1];
    }
    auto cheb_transform = [&](const Eigen::MatrixXd& values, Eigen::MatrixXd& coeffs) {
      coeffs.resize(values.rows(), M + 1);
      for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (int j = 0; j <= M; ++j) {
          double sum = 0.0;
          for (int m = 0; m <= M; ++m) {
            const double w = (m == 0 || m == M) ? 0.5 : 1.0;
            sum += w * values(r, m) * cheb(j, m);
          }
          const double scale = (j == 0 || j == M) ? 1.0 / M : 2.0 / M;
          coeffs(r, j) = scale * sum;
        }
      }
    };
    cheb_transform(cos_modes, cos_out);
    cheb_transform(sin_modes, sin_out);
  };

  SpectralField field(N, M);
  transform(P_samples, field.alpha, field.beta);
  transform(Q_samples, field.xi, field.eta);
  return field;
}

}  // namespace cavity::spectral
