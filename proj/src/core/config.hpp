#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "model.hpp"
#include "solver.hpp"

namespace cavity::config {

/// Validation or parse failure. `field` is the dotted key path ("solver.tol_final"),
/// `line` the 1-based line in the source text when known (0 otherwise).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);

  [[nodiscard]] const std::string& field() const { return field_; }
  [[nodiscard]] int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct MaterialConfig {
  std::string tag = "default";
  double p = 1.5;
  double kappa = 2.0 / 3.0;
};

/// Parameter study attached to a problem. Which fields matter depends on kind:
///   M, N             values = resolutions
///   Nq_ratio, Mq_ratio  values = N'/N or M'/M
///   lambda           values = symmetric stretches
///   lambda1          values = lambda1, with lambda2 = lambda1 / ratio
///   domains          domains = (eps, gamma) pairs, lambda_gamma, M_values
///   interp           domains, lambda_gamma, M_values (no solves)
struct StudyConfig {
  std::string kind;
  std::string name = "study";
  std::vector<double> values;
  double ratio = 1.0;
  std::vector<std::array<double, 2>> domains;
  double lambda_gamma = 1.25;
  /// Second boundary value for oval subdomain studies; 0 means symmetric.
  double lambda2_gamma = 0.0;
  std::vector<int> M_values;
  bool warm_start = true;
};

struct ProblemConfig {
  double eps = 1e-3;
  double gamma = 1.0;
  double lambda1 = 2.0;
  double lambda2 = 2.0;
  int N = 16;
  int M = 32;
  int Nq = 0;  ///< N'; 0 selects 2N
  int Mq = 0;  ///< M' (largest radial node index); 0 selects 8M
  MaterialConfig material;
  solver::SolverConfig solver;
  solver::SeedMode seed_mode = solver::SeedMode::radial;
  solver::PolishConfig seed_polish;
  int oracle_grid = 2000;
  std::optional<StudyConfig> study;

  [[nodiscard]] int angular_nodes() const { return Nq > 0 ? Nq : 2 * N; }
  [[nodiscard]] int radial_max_index() const { return Mq > 0 ? Mq : 8 * M; }
  [[nodiscard]] bool symmetric() const { return lambda1 == lambda2; }

  /// Throws ConfigError naming the first offending field (line 0).
  void validate() const;
};

/// Parses and validates a JSON document. Unknown keys are rejected so that
/// typos do not silently fall back to defaults.
[[nodiscard]] ProblemConfig parse_config(const std::string& text);

/// Applies KEY=VALUE with a dotted key ("solver.tol_final=1e-9", "lambda=2.2")
/// and re-validates. VALUE is read as JSON, falling back to a plain string.
void apply_override(ProblemConfig& config, std::string_view assignment);

/// Fully resolved form (defaults expanded), accepted back by parse_config.
[[nodiscard]] nlohmann::json to_json(const ProblemConfig& config);
[[nodiscard]] nlohmann::json to_json(const StudyConfig& study);

[[nodiscard]] model::MaterialModel make_material(const MaterialConfig& material);
[[nodiscard]] model::BoundaryStretch make_stretch(const ProblemConfig& config);
[[nodiscard]] assembly::Discretization make_discretization(const ProblemConfig& config);

}  // namespace cavity::config
