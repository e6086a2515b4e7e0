#pragma once

#include <vector>

#include "model.hpp"

namespace cavity::oracle {

/// Incompressible radial cavitation map R(r) = sqrt((lambda gamma)^2 + r^2 - gamma^2),
/// normalised so that R(gamma) = lambda gamma. Throws std::domain_error when
/// the radicand is not positive.
[[nodiscard]] double incompressible_exact(double r, double lambda, double gamma);

/// Deformed radius s(r) of the radially symmetric minimiser.
struct RadialProfile {
  std::vector<double> r_grid;
  std::vector<double> s_values;
  double energy = 0.0;
  double cavity_radius = 0.0;
  double residual_norm = 0.0;  ///< norm of the discrete Euler-Lagrange residual
  int n_grid = 0;              ///< number of elements
  int newton_iterations = 0;
};

/// Minimises 2 pi int_eps^gamma [g((s'^2 + s^2/r^2)/2) + h(s s'/r)] r dr over
/// continuous piecewise quadratics on a logarithmically graded grid of
/// n_grid elements, with s(gamma) = lambda gamma and a free inner end.
/// Throws std::invalid_argument on bad input and std::runtime_error if Newton
/// fails to converge.
[[nodiscard]] RadialProfile radial_reference(double eps, double gamma, double lambda,
                                             const model::MaterialModel& mat, int n_grid);

struct CheckedProfile {
  RadialProfile profile;          ///< the finer of the two solves
  double energy_change = 0.0;     ///< |E(2n) - E(n)|
  double radius_change = 0.0;     ///< |s_2n(eps) - s_n(eps)|
};

/// radial_reference at n_grid and 2 n_grid. Throws std::runtime_error when the
/// energy moves by more than energy_tol under the doubling.
[[nodiscard]] CheckedProfile radial_reference_checked(double eps, double gamma, double lambda,
                                                      const model::MaterialModel& mat, int n_grid,
                                                      double energy_tol = 1e-9);

/// Value of the piecewise quadratic profile at r (linear search on the grid).
[[nodiscard]] double profile_value(const RadialProfile& profile, double r);

}  // namespace cavity::oracle
