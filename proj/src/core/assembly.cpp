#include "assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavity::assembly {

Layout::Layout(int N, int M) : N_(N), M_(M) {
  if (N < 2 || N % 2 != 0) throw std::invalid_argument("N must be even and at least 2");
  if (M < 1) throw std::invalid_argument("M must be at least 1");
  beta_offset_ = cosine_modes() * M;
  xi_offset_ = beta_offset_ + sine_modes() * M;
  eta_offset_ = xi_offset_ + cosine_modes() * M;
}

BoundaryData boundary_fourier_coeffs(std::span<const double> P0_samples,
                                     std::span<const double> Q0_samples) {
  if (P0_samples.size() != Q0_samples.size()) {
    throw std::invalid_argument("boundary samples for P0 and Q0 differ in length");
  }
  return {spectral::discrete_fourier(P0_samples), spectral::discrete_fourier(Q0_samples)};
}

BoundaryData boundary_data(const model::BoundaryStretch& stretch, double gamma, int N) {
  const std::vector<double> phi = spectral::interpolation_angular_nodes(N);
  std::vector<double> radius(N), angle(N);
  for (int n = 0; n < N; ++n) {
    radius[n] = stretch.radius(gamma, phi[n]);
    angle[n] = stretch.angle_offset(phi[n]);
  }
  return boundary_fourier_coeffs(radius, angle);
}

spectral::SpectralField assemble_field(const UnknownVector& y, const BoundaryData& bc, int M) {
  const int N = bc.N();
  const Layout layout(N, M);
  if (y.size() != layout.size()) {
    throw std::invalid_argument("unknown vector has length " + std::to_string(y.size()) +
                                ", expected " + std::to_string(layout.size()));
  }
  spectral::SpectralField field(N, M);
  for (int k = 0; k < layout.cosine_modes(); ++k) {
    double sum_a = 0.0;
    double sum_x = 0.0;
    for (int j = 1; j <= M; ++j) {
      field.alpha(k, j) = y[layout.alpha(k, j)];
      field.xi(k, j) = y[layout.xi(k, j)];
      sum_a += field.alpha(k, j);
      sum_x += field.xi(k, j);
    }
    field.alpha(k, 0) = bc.radius.cosine[k] - sum_a;
    field.xi(k, 0) = bc.angle.cosine[k] - sum_x;
  }
  for (int k = 1; k <= layout.sine_modes(); ++k) {
    double sum_b = 0.0;
    double sum_e = 0.0;
    for (int j = 1; j <= M; ++j) {
      field.beta(k - 1, j) = y[layout.beta(k, j)];
      field.eta(k - 1, j) = y[layout.eta(k, j)];
      sum_b += field.beta(k - 1, j);
      sum_e += field.eta(k - 1, j);
    }
    field.beta(k - 1, 0) = bc.radius.sine[k - 1] - sum_b;
    field.eta(k - 1, 0) = bc.angle.sine[k - 1] - sum_e;
  }
  return field;
}

UnknownVector free_coefficients(const spectral::SpectralField& field) {
  const Layout layout(field.N, field.M);
  UnknownVector y(layout.size());
  for (int k = 0; k < layout.cosine_modes(); ++k) {
    for (int j = 1; j <= field.M; ++j) {
      y[layout.alpha(k, j)] = field.alpha(k, j);
      y[layout.xi(k, j)] = field.xi(k, j);
    }
  }
  for (int k = 1; k <= layout.sine_modes(); ++k) {
    for (int j = 1; j <= field.M; ++j) {
      y[layout.beta(k, j)] = field.beta(k - 1, j);
      y[layout.eta(k, j)] = field.eta(k - 1, j);
    }
  }
  return y;
}

Discretization::Discretization(int N, int M, const spectral::QuadratureRule& rule,
                               model::AnnulusDomain domain, model::MaterialModel material,
                               BoundaryData bc)
    : layout_(N, M),
      basis_(N, M, rule),
      domain_(domain),
      material_(std::move(material)),
      bc_(std::move(bc)) {
  if (bc_.N() != N) throw std::invalid_argument("boundary data resolution does not match N");
  if (!material_.h || !material_.h_prime) {
    throw std::invalid_argument("material must provide h and h'");
  }
  const int nq = rule.angular_count();
  const int mq = rule.radial_count();
  radius_.resize(mq);
  weight_.resize(nq, mq);
  for (int m = 0; m < mq; ++m) {
    const double rho = rule.chebyshev_nodes[m];
    radius_[m] = domain_.rho_to_r(rho);
    const double radial_weight = std::sqrt(std::max(0.0, 1.0 - rho * rho)) * rule.chebyshev_weights[m];
    for (int n = 0; n < nq; ++n) weight_(n, m) = radial_weight * rule.fourier_weights[n];
  }
  const Eigen::MatrixXd& T = basis_.cheb_table();
  const Eigen::MatrixXd& dT = basis_.cheb_slope_table();
  test_ = (T.bottomRows(M).array() - 1.0).matrix().transpose();
  test_rho_ = dT.bottomRows(M).transpose();
}

spectral::SpectralField Discretization::field(const UnknownVector& y) const {
  return assemble_field(y, bc_, layout_.M());
}

Evaluation Discretization::evaluate(const UnknownVector& y, bool with_residual) const {
  const spectral::SpectralField f = field(y);
  const spectral::FieldGrid grid = basis_.evaluate(f);
  const int nq = static_cast<int>(weight_.rows());
  const int mq = static_cast<int>(weight_.cols());
  const double rr = domain_.rho_r();
  const double growth = 0.5 * material_.p - 1.0;

  Evaluation out;
  out.min_D = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd cP, cPr, cPf, cQr, cQf;
  if (with_residual) {
    cP.resize(nq, mq);
    cPr.resize(nq, mq);
    cPf.resize(nq, mq);
    cQr.resize(nq, mq);
    cQf.resize(nq, mq);
  }

  double energy = 0.0;
  for (int m = 0; m < mq; ++m) {
    const double r = radius_[m];
    const double r_rr = r * rr;
    const double inv_r_rr = 1.0 / r_rr;
    for (int n = 0; n < nq; ++n) {
      const double P = grid.P(n, m);
      const double Pr = grid.P_rho(n, m);
      const double Pf = grid.P_phi(n, m);
      const double Qr = grid.Q_rho(n, m);
      const double qp = grid.Q_phi(n, m) + 1.0;

      const double jac = Pr * qp - Pf * Qr;
      const double D = rr / r * P * jac;
      out.min_D = std::min(out.min_D, D);
      if (!(D > 0.0)) {
        if (!out.energy.inadmissible) out.energy.inadmissible = NodeIndex{n, m};
        continue;
      }
      if (out.energy.inadmissible) continue;

      const double F = 0.5 * rr * rr * (Pr * Pr + P * P * Qr * Qr) +
                       0.5 / (r * r) * (Pf * Pf + P * P * qp * qp);
      const double w = weight_(n, m);
      // g(F) = kappa (2F) s and g'(F) = kappa p s with s = (2F)^{p/2-1}.
      const double s = std::pow(2.0 * F, growth);
      energy += w * (material_.kappa * 2.0 * F * s + material_.h(D)) * r / rr;

      if (with_residual) {
        const double g1 = material_.kappa * material_.p * s;
        const double h1 = material_.h_prime(D);
        cP(n, m) = w * (g1 * (r_rr * P * Qr * Qr + inv_r_rr * P * qp * qp) + h1 * jac);
        cPr(n, m) = w * (g1 * r_rr * Pr + h1 * P * qp);
        cPf(n, m) = w * (g1 * inv_r_rr * Pf - h1 * P * Qr);
        cQr(n, m) = w * P * (g1 * r_rr * P * Qr - h1 * Pf);
        cQf(n, m) = w * P * (g1 * inv_r_rr * P * qp + h1 * Pr);
      }
    }
  }

  if (out.energy.inadmissible) {
    out.energy.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.energy.value = energy;
  if (!with_residual) return out;

  // Contract radially against (T_j - 1) and T_j', then angularly.
  const Eigen::MatrixXd G1 = cP * test_ + cPr * test_rho_;
  const Eigen::MatrixXd G2 = cPf * test_;
  const Eigen::MatrixXd H1 = cQr * test_rho_;
  const Eigen::MatrixXd H2 = cQf * test_;

  const spectral::GridBasis& b = basis_;
  const Eigen::MatrixXd R_alpha = b.cos_table().transpose() * G1 + b.cos_slope_table().transpose() * G2;
  const Eigen::MatrixXd R_beta = b.sin_table().transpose() * G1 + b.sin_slope_table().transpose() * G2;
  const Eigen::MatrixXd R_xi = b.cos_table().transpose() * H1 + b.cos_slope_table().transpose() * H2;
  const Eigen::MatrixXd R_eta = b.sin_table().transpose() * H1 + b.sin_slope_table().transpose() * H2;

  const int M = layout_.M();
  out.residual.resize(layout_.size());
  for (int k = 0; k < layout_.cosine_modes(); ++k) {
    for (int j = 1; j <= M; ++j) {
      out.residual[layout_.alpha(k, j)] = R_alpha(k, j - 1);
      out.residual[layout_.xi(k, j)] = R_xi(k, j - 1);
    }
  }
  for (int k = 1; k <= layout_.sine_modes(); ++k) {
    for (int j = 1; j <= M; ++j) {
      out.residual[layout_.beta(k, j)] = R_beta(k - 1, j - 1);
      out.residual[layout_.eta(k, j)] = R_eta(k - 1, j - 1);
    }
  }
  return out;
}

EnergyValue discrete_energy(const Discretization& disc, const UnknownVector& y) {
  return disc.evaluate(y, false).energy;
}

std::optional<Eigen::VectorXd> residual(const Discretization& disc, const UnknownVector& y) {
  Evaluation e = disc.evaluate(y, true);
  if (!e.admissible()) return std::nullopt;
  return std::move(e.residual);
}

spectral::QuadratureRule resolved_rule(const model::AnnulusDomain& domain, int angular_count,
                                       int panels, int order) {
  if (panels < 1) throw std::invalid_argument("resolved_rule: panels must be positive");
  spectral::QuadratureRule rule = spectral::fourier_rule(angular_count);
  const spectral::GaussLegendre gl = spectral::gauss_legendre(order);
  const double ratio = domain.gamma() / domain.eps();
  double a = -1.0;
  for (int p = 0; p < panels; ++p) {
    const double b = p + 1 == panels
                         ? 1.0
                         : domain.r_to_rho(domain.eps() * std::pow(ratio, double(p + 1) / panels));
    for (int i = 0; i < order; ++i) {
      const double rho = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
      rule.chebyshev_nodes.push_back(rho);
      rule.chebyshev_weights.push_back(0.5 * (b - a) * gl.weights[i] / std::sqrt(1.0 - rho * rho));
    }
    a = b;
  }
  return rule;
}

double resolved_energy(const Discretization& disc, const UnknownVector& y) {
  const int angular = std::max(4 * disc.layout().N(), disc.rule().angular_count());
  const Discretization fine(disc.layout().N(), disc.layout().M(),
                            resolved_rule(disc.domain(), angular), disc.domain(), disc.material(),
                            disc.boundary());
  return fine.evaluate(y, false).energy.value;
}

Eigen::MatrixXd jacobian_fd(const Discretization& disc, const UnknownVector& y) {
  const auto base = residual(disc, y);
  if (!base) throw std::domain_error("jacobian_fd: base point is inadmissible");
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd J(n, n);
  UnknownVector probe = y;
  for (int j = 0; j < n; ++j) {
    // The residual varies on a scale of ~eps / j^2 near a small cavity, so
    // the step is short and differences are central. A probe with D <= 0
    // falls back to the one-sided difference, then to a shorter step.
    double step = 1e-10 * std::max(1.0, std::abs(y[j]));
    bool done = false;
    for (int attempt = 0; attempt < 12 && !done; ++attempt, step *= 0.25) {
      probe[j] = y[j] + step;
      const auto plus = residual(disc, probe);
      probe[j] = y[j] - step;
      const auto minus = residual(disc, probe);
      if (plus && minus) {
        J.col(j) = (*plus - *minus) / (2.0 * step);
      } else if (plus) {
        J.col(j) = (*plus - *base) / step;
      } else if (minus) {
        J.col(j) = (*base - *minus) / step;
      }
      done = plus || minus;
    }
    if (!done) throw std::domain_error("jacobian_fd: no admissible difference point");
    probe[j] = y[j];
  }
  return J;
}

}  // namespace cavity::assembly
