#pragma once

#include <random>

#include "assembly.hpp"
#include "solver.hpp"

namespace fixtures {

inline cavity::assembly::Discretization make_disc(double eps, double gamma, double l1, double l2,
                                                  int N, int M) {
  using namespace cavity;
  return assembly::Discretization(N, M, spectral::product_rule(2 * N, 8 * M),
                                  model::AnnulusDomain(eps, gamma), model::default_material(),
                                  assembly::boundary_data(model::BoundaryStretch{l1, l2}, gamma, N));
}

/// Seed plus a random perturbation that decays with the Chebyshev degree,
/// with the amplitude halved until D >= 0.2 on the grid.
inline cavity::assembly::UnknownVector random_admissible(const cavity::assembly::Discretization& disc,
                                                         std::mt19937& rng, double amplitude) {
  using namespace cavity;
  const assembly::UnknownVector base = solver::initial_guess(
      disc, model::BoundaryStretch{2.0, 2.0}, solver::SeedMode::incompressible);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int M = disc.layout().M();
  for (double a = amplitude;; a *= 0.5) {
    assembly::UnknownVector y = base;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const int j = static_cast<int>(i % M) + 1;
      y[i] += a * normal(rng) / (j * j);
    }
    const assembly::Evaluation e = disc.evaluate(y, false);
    if (e.admissible() && e.min_D >= 0.2) return y;
  }
}

}  // namespace fixtures
