#include "oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace cavity::oracle {

double incompressible_exact(double r, double lambda, double gamma) {
  const double radicand = lambda * lambda * gamma * gamma + r * r - gamma * gamma;
  if (!(radicand > 0.0)) throw std::domain_error("incompressible_exact: non-positive radicand");
  return std::sqrt(radicand);
}

namespace {

constexpr int kGaussPoints = 6;

struct GaussRule {
  std::array<double, kGaussPoints> x{};
  std::array<double, kGaussPoints> w{};
};

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
GaussRule gauss_legendre() {
  GaussRule rule;
  constexpr int n = kGaussPoints;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.x[i] = x;
    rule.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const GaussRule& gauss() {
  static const GaussRule rule = gauss_legendre();
  return rule;
}

// Integrand L(r, s, s') = [g(F) + h(D)] r with its first and second partials.
struct Local {
  double value = 0.0;
  double ds = 0.0, dsp = 0.0;
  double dss = 0.0, dssp = 0.0, dspsp = 0.0;
  bool admissible = true;
};

Local integrand(const model::MaterialModel& mat, double r, double s, double sp, bool second) {
  Local out;
  const double D = s * sp / r;
  if (!(D > 0.0) || !(s > 0.0)) {
    out.admissible = false;
    return out;
  }
  const double F = 0.5 * (sp * sp + s * s / (r * r));
  const double two_f = 2.0 * F;
  const double pw = std::pow(two_f, 0.5 * mat.p - 1.0);
  const double g = mat.kappa * two_f * pw;
  const double g1 = mat.kappa * mat.p * pw;
  const double h = mat.h(D);
  const double h1 = mat.h_prime(D);
  out.value = (g + h) * r;
  out.ds = g1 * s / r + h1 * sp;
  out.dsp = r * g1 * sp + h1 * s;
  if (second) {
    const double g2 = mat.kappa * mat.p * (mat.p - 2.0) * pw / two_f;
    // h'' is not part of the material interface; a central difference of h'
    // only perturbs the Newton matrix, never the converged state.
    const double dd = 1e-6 * D;
    const double h2 = (mat.h_prime(D + dd) - mat.h_prime(D - dd)) / (2.0 * dd);
    const double Fs = s / (r * r);
    const double Fsp = sp;
    const double Ds = sp / r;
    const double Dsp = s / r;
    out.dss = r * (g2 * Fs * Fs + g1 / (r * r) + h2 * Ds * Ds);
    out.dssp = r * (g2 * Fs * Fsp + h2 * Ds * Dsp + h1 / r);
    out.dspsp = r * (g2 * Fsp * Fsp + g1 + h2 * Dsp * Dsp);
  }
  return out;
}

struct Problem {
  const model::MaterialModel& mat;
  std::vector<double> nodes;  // element endpoints, n + 1
  double boundary_value;
  int elements() const { return static_cast<int>(nodes.size()) - 1; }
  int unknowns() const { return 2 * elements(); }  // last global dof is fixed
};

struct Assembled {
  double energy = 0.0;
  Eigen::VectorXd gradient;
  Eigen::SparseMatrix<double> hessian;
  bool admissible = true;
};

// Quadratic Lagrange basis on [-1, 1] at nodes -1, 0, 1.
inline std::array<double, 3> shape(double x) {
  return {0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)};
}
inline std::array<double, 3> shape_slope(double x) { return {x - 0.5, -2.0 * x, x + 0.5}; }

double dof_value(const Problem& pb, const Eigen::VectorXd& s, int dof) {
  return dof < pb.unknowns() ? s[dof] : pb.boundary_value;
}

Assembled assemble(const Problem& pb, const Eigen::VectorXd& s, int order) {
  Assembled out;
  const int n = pb.unknowns();
  if (order >= 1) out.gradient = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> triplets;
  if (order >= 2) triplets.reserve(static_cast<std::size_t>(pb.elements()) * 9);
  const GaussRule& gr = gauss();

  for (int e = 0; e < pb.elements(); ++e) {
    const double a = pb.nodes[e];
    const double b = pb.nodes[e + 1];
    const double half = 0.5 * (b - a);
    const std::array<int, 3> dofs{2 * e, 2 * e + 1, 2 * e + 2};
    const std::array<double, 3> vals{dof_value(pb, s, dofs[0]), dof_value(pb, s, dofs[1]),
                                     dof_value(pb, s, dofs[2])};
    std::array<double, 3> grad{};
    std::array<std::array<double, 3>, 3> hess{};
    for (int q = 0; q < kGaussPoints; ++q) {
      const double x = gr.x[q];
      const double r = 0.5 * (a + b) + half * x;
      const auto N = shape(x);
      const auto dN = shape_slope(x);
      double sv = 0.0;
      double spv = 0.0;
      std::array<double, 3> dNr{};
      for (int i = 0; i < 3; ++i) {
        dNr[i] = dN[i] / half;
        sv += N[i] * vals[i];
        spv += dNr[i] * vals[i];
      }
      const Local L = integrand(pb.mat, r, sv, spv, order >= 2);
      if (!L.admissible) {
        out.admissible = false;
        return out;
      }
      const double w = gr.w[q] * half;
      out.energy += w * L.value;
      if (order >= 1) {
        for (int i = 0; i < 3; ++i) grad[i] += w * (L.ds * N[i] + L.dsp * dNr[i]);
      }
      if (order >= 2) {
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            hess[i][j] += w * (L.dss * N[i] * N[j] + L.dssp * (N[i] * dNr[j] + dNr[i] * N[j]) +
                               L.dspsp * dNr[i] * dNr[j]);
          }
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      if (dofs[i] >= n) continue;
      if (order >= 1) out.gradient[dofs[i]] += grad[i];
      if (order >= 2) {
        for (int j = 0; j < 3; ++j) {
          if (dofs[j] < n) triplets.emplace_back(dofs[i], dofs[j], hess[i][j]);
        }
      }
    }
  }
  const double two_pi = 2.0 * std::numbers::pi;
  out.energy *= two_pi;
  if (order >= 1) out.gradient *= two_pi;
  if (order >= 2) {
    out.hessian.resize(n, n);
    out.hessian.setFromTriplets(triplets.begin(), triplets.end());
    out.hessian *= two_pi;
  }
  return out;
}

}  // namespace

RadialProfile radial_reference(double eps, double gamma, double lambda,
                               const model::MaterialModel& mat, int n_grid) {
  if (!(eps > 0.0 && eps < gamma)) throw std::invalid_argument("radial_reference: need 0 < eps < gamma");
  if (!(lambda > 1.0)) throw std::invalid_argument("radial_reference: lambda must exceed 1");
  if (n_grid < 1000) throw std::invalid_argument("radial_reference: n_grid must be at least 1000");

  Problem pb{mat, {}, lambda * gamma};
  pb.nodes.resize(n_grid + 1);
  const double log_ratio = std::log(gamma / eps);
  for (int i = 0; i <= n_grid; ++i) pb.nodes[i] = eps * std::exp(log_ratio * i / n_grid);
  pb.nodes.front() = eps;
  pb.nodes.back() = gamma;

  auto dof_radius = [&](int dof) {
    const int e = dof / 2;
    return dof % 2 == 0 ? pb.nodes[e] : 0.5 * (pb.nodes[e] + pb.nodes[e + 1]);
  };

  const int n = pb.unknowns();
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = incompressible_exact(dof_radius(i), lambda, gamma);

  Assembled cur = assemble(pb, s, 2);
  if (!cur.admissible) throw std::runtime_error("radial_reference: inadmissible starting profile");

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  RadialProfile profile;
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    ldlt.compute(cur.hessian);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success) step = ldlt.solve(cur.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(cur.gradient) <= 0.0) {
      step = cur.gradient;  // not a descent direction: fall back to steepest descent
    }
    double t = 1.0;
    Assembled next;
    Eigen::VectorXd trial;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = s - t * step;
      next = assemble(pb, trial, 1);
      if (next.admissible && (next.energy < cur.energy || next.gradient.norm() < cur.gradient.norm())) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    profile.newton_iterations = iter + 1;
    if (!accepted) {
      // No decrease is possible at working precision. That is convergence
      // when the step is tiny or the decrease the Newton model predicts is
      // below the rounding level of the energy.
      const double predicted = 0.5 * std::abs(step.dot(cur.gradient));
      converged = step.lpNorm<Eigen::Infinity>() < 1e-10 * s.lpNorm<Eigen::Infinity>() ||
                  predicted <= 1e3 * std::numeric_limits<double>::epsilon() * std::abs(cur.energy);
      break;
    }
    const double step_size = (t * step).lpNorm<Eigen::Infinity>();
    s = trial;
    cur = assemble(pb, s, 2);
    if (step_size < 1e-12 * s.lpNorm<Eigen::Infinity>()) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw std::runtime_error("radial_reference: Newton did not converge (residual " +
                             std::to_string(cur.gradient.norm()) + ")");
  }

  profile.n_grid = n_grid;
  profile.energy = cur.energy;
  // Size of the Newton correction at the final state: the equilibrium
  // residual measured in displacement units.
  ldlt.compute(cur.hessian);
  profile.residual_norm = ldlt.info() == Eigen::Success
                              ? Eigen::VectorXd(ldlt.solve(cur.gradient)).lpNorm<Eigen::Infinity>()
                              : cur.gradient.lpNorm<Eigen::Infinity>();
  profile.r_grid.resize(n + 1);
  profile.s_values.resize(n + 1);
  for (int i = 0; i < n; ++i) {
    profile.r_grid[i] = dof_radius(i);
    profile.s_values[i] = s[i];
  }
  profile.r_grid[n] = gamma;
  profile.s_values[n] = pb.boundary_value;
  profile.cavity_radius = s[0];
  return profile;
}

CheckedProfile radial_reference_checked(double eps, double gamma, double lambda,
                                        const model::MaterialModel& mat, int n_grid,
                                        double energy_tol) {
  const RadialProfile coarse = radial_reference(eps, gamma, lambda, mat, n_grid);
  CheckedProfile out{radial_reference(eps, gamma, lambda, mat, 2 * n_grid), 0.0, 0.0};
  out.energy_change = std::abs(out.profile.energy - coarse.energy);
  out.radius_change = std::abs(out.profile.cavity_radius - coarse.cavity_radius);
  if (!(out.energy_change <= energy_tol)) {
    throw std::runtime_error("radial_reference: energy changed by " +
                             std::to_string(out.energy_change) + " under grid doubling");
  }
  return out;
}

double profile_value(const RadialProfile& profile, double r) {
  const auto& x = profile.r_grid;
  if (x.size() < 3 || r < x.front() || r > x.back()) {
    throw std::domain_error("profile_value: r outside the profile grid");
  }
  // Element e spans dofs 2e..2e+2.
  const auto it = std::upper_bound(x.begin(), x.end(), r);
  std::size_t idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - x.begin() - 1));
  std::size_t e = std::min(idx / 2, (x.size() - 1) / 2 - 1);
  const double a = x[2 * e];
  const double b = x[2 * e + 2];
  const double xi = (2.0 * r - a - b) / (b - a);
  const auto N = shape(xi);
  return N[0] * profile.s_values[2 * e] + N[1] * profile.s_values[2 * e + 1] +
         N[2] * profile.s_values[2 * e + 2];
}

}  // namespace cavity::oracle
