#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cavity::config {

using nlohmann::json;

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + field + ": " + message
                                  : field + ": " + message),
      field_(std::move(field)),
      line_(line) {}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field, 0, message);
}

// First line on which "key" appears; 0 if absent.
int line_of_key(const std::string& text, const std::string& field) {
  const std::string leaf = field.substr(field.find_last_of('.') + 1);
  const std::size_t pos = text.find('"' + leaf + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

void check_keys(const json& object, const std::string& prefix, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) fail(prefix + key, "unknown key");
  }
}

template <class T>
void read(const json& object, const std::string& prefix, const char* key, T& out) {
  auto it = object.find(key);
  if (it == object.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(prefix + key, "has the wrong type");
  }
}

void read_int(const json& object, const std::string& prefix, const char* key, int& out) {
  auto it = object.find(key);
  if (it == object.end()) return;
  if (!it->is_number_integer()) fail(prefix + key, "must be an integer");
  out = it->get<int>();
}

void read_material(const json& j, MaterialConfig& m) {
  if (!j.is_object()) fail("material", "must be an object");
  check_keys(j, "material.", {"tag", "p", "kappa"});
  read(j, "material.", "tag", m.tag);
  read(j, "material.", "p", m.p);
  read(j, "material.", "kappa", m.kappa);
}

void read_solver(const json& j, solver::SolverConfig& s) {
  if (!j.is_object()) fail("solver", "must be an object");
  check_keys(j, "solver.",
             {"tol_start", "tol_final", "tol_shrink", "step_grow", "step_shrink", "step_min",
              "max_outer_iterations", "broyden_skip"});
  read(j, "solver.", "tol_start", s.tol_start);
  read(j, "solver.", "tol_final", s.tol_final);
  read(j, "solver.", "tol_shrink", s.tol_shrink);
  read(j, "solver.", "step_grow", s.step_grow);
  read(j, "solver.", "step_shrink", s.step_shrink);
  read(j, "solver.", "step_min", s.step_min);
  if (auto it = j.find("max_outer_iterations"); it != j.end()) {
    if (!it->is_number_integer()) fail("solver.max_outer_iterations", "must be an integer");
    s.max_outer_iterations = it->get<long>();
  }
  read(j, "solver.", "broyden_skip", s.broyden_skip);
}

void read_study(const json& j, StudyConfig& s) {
  if (!j.is_object()) fail("study", "must be an object");
  check_keys(j, "study.",
             {"kind", "name", "values", "ratio", "domains", "lambda_gamma", "lambda2_gamma",
              "M_values", "warm_start"});
  read(j, "study.", "kind", s.kind);
  read(j, "study.", "name", s.name);
  read(j, "study.", "values", s.values);
  read(j, "study.", "ratio", s.ratio);
  read(j, "study.", "domains", s.domains);
  read(j, "study.", "lambda_gamma", s.lambda_gamma);
  read(j, "study.", "lambda2_gamma", s.lambda2_gamma);
  read(j, "study.", "M_values", s.M_values);
  read(j, "study.", "warm_start", s.warm_start);
}

void read_problem(const json& j, ProblemConfig& c) {
  if (!j.is_object()) fail("(root)", "config must be a JSON object");
  check_keys(j, "",
             {"eps", "gamma", "lambda", "lambda1", "lambda2", "N", "M", "Nq", "Mq", "material",
              "solver", "seed_mode", "seed_polish", "oracle_grid", "study"});
  read(j, "", "eps", c.eps);
  read(j, "", "gamma", c.gamma);
  if (j.contains("lambda")) {
    if (j.contains("lambda1") || j.contains("lambda2")) {
      fail("lambda", "give either lambda or lambda1/lambda2, not both");
    }
    read(j, "", "lambda", c.lambda1);
    c.lambda2 = c.lambda1;
  }
  read(j, "", "lambda1", c.lambda1);
  read(j, "", "lambda2", c.lambda2);
  read_int(j, "", "N", c.N);
  read_int(j, "", "M", c.M);
  read_int(j, "", "Nq", c.Nq);
  read_int(j, "", "Mq", c.Mq);
  if (auto it = j.find("material"); it != j.end()) read_material(*it, c.material);
  if (auto it = j.find("solver"); it != j.end()) read_solver(*it, c.solver);
  if (auto it = j.find("seed_mode"); it != j.end()) {
    if (!it->is_string()) fail("seed_mode", "must be a string");
    try {
      c.seed_mode = solver::parse_seed_mode(it->get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail("seed_mode", e.what());
    }
  }
  if (auto it = j.find("seed_polish"); it != j.end()) {
    if (!it->is_object()) fail("seed_polish", "must be an object");
    check_keys(*it, "seed_polish.", {"max_iterations", "target"});
    read_int(*it, "seed_polish.", "max_iterations", c.seed_polish.max_iterations);
    read(*it, "seed_polish.", "target", c.seed_polish.target);
  }
  read_int(j, "", "oracle_grid", c.oracle_grid);
  if (auto it = j.find("study"); it != j.end() && !it->is_null()) {
    StudyConfig s;
    read_study(*it, s);
    c.study = s;
  }
}

const std::set<std::string> kStudyKinds = {"M",      "N",       "Nq_ratio", "Mq_ratio",
                                           "lambda", "lambda1", "domains",  "interp"};

void validate_study(const StudyConfig& s) {
  if (!kStudyKinds.count(s.kind)) fail("study.kind", "unknown study kind '" + s.kind + "'");
  if (s.name.empty() || s.name.find('/') != std::string::npos) {
    fail("study.name", "must be a non-empty file stem");
  }
  const bool uses_values = s.kind != "domains" && s.kind != "interp";
  if (uses_values && s.values.empty()) fail("study.values", "must list at least one value");
  if (s.kind == "M" || s.kind == "N") {
    for (double v : s.values) {
      if (v != std::floor(v) || v < 1) fail("study.values", "resolutions must be positive integers");
      if (s.kind == "N" && static_cast<long>(v) % 2 != 0) fail("study.values", "N must be even");
    }
  }
  if ((s.kind == "Nq_ratio" || s.kind == "Mq_ratio")) {
    for (double v : s.values) {
      if (!(v > 0.0)) fail("study.values", "ratios must be positive");
    }
  }
  if (s.kind == "lambda" || s.kind == "lambda1") {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!(s.values[i] > 0.0)) fail("study.values", "stretches must be positive");
      if (i > 0 && !(s.values[i] > s.values[i - 1])) {
        fail("study.values", "stretches must be strictly ascending");
      }
    }
    if (!(s.ratio > 0.0)) fail("study.ratio", "must be positive");
  }
  if (s.kind == "domains" || s.kind == "interp") {
    if (s.domains.empty()) fail("study.domains", "must list at least one (eps, gamma) pair");
    for (const auto& d : s.domains) {
      if (!(d[0] > 0.0 && d[0] < d[1])) fail("study.domains", "each pair needs 0 < eps < gamma");
    }
    if (s.M_values.empty()) fail("study.M_values", "must list at least one M");
    for (int m : s.M_values) {
      if (m < 1) fail("study.M_values", "must be positive");
    }
    if (!(s.lambda_gamma > 0.0)) fail("study.lambda_gamma", "must be positive");
    if (s.lambda2_gamma < 0.0) fail("study.lambda2_gamma", "must be non-negative");
  }
}

}  // namespace

void ProblemConfig::validate() const {
  if (!(eps > 0.0)) fail("eps", "must be positive");
  if (!(gamma > 0.0)) fail("gamma", "must be positive");
  if (!(eps < gamma)) fail("eps", "must be smaller than gamma");
  if (!(lambda1 > 0.0)) fail("lambda1", "must be positive");
  if (!(lambda2 > 0.0)) fail("lambda2", "must be positive");
  if (N < 2 || N % 2 != 0) fail("N", "must be even and at least 2");
  if (M < 1) fail("M", "must be at least 1");
  if (Nq < 0) fail("Nq", "must be positive (or 0 for the default 2N)");
  if (Mq < 0) fail("Mq", "must be positive (or 0 for the default 8M)");
  if (Nq > 0 && Nq < N) fail("Nq", "must be at least N");
  if (Mq > 0 && Mq < M) fail("Mq", "must be at least M");
  if (material.tag != "default") fail("material.tag", "only 'default' is available");
  if (!(material.p > 1.0 && material.p < 2.0)) fail("material.p", "must lie in (1, 2)");
  if (!(material.kappa > 0.0)) fail("material.kappa", "must be positive");
  if (oracle_grid < 1000) fail("oracle_grid", "must be at least 1000");
  if (seed_polish.max_iterations < 0) fail("seed_polish.max_iterations", "must be non-negative");
  if (!(seed_polish.target > 0.0)) fail("seed_polish.target", "must be positive");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const std::size_t colon = what.find(':');
    fail(what.substr(0, colon), colon == std::string::npos ? what : what.substr(colon + 2));
  }
  if (study) validate_study(*study);
}

ProblemConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
    throw ConfigError("(syntax)", line, e.what());
  }
  ProblemConfig config;
  try {
    read_problem(j, config);
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), line_of_key(text, e.field()),
                      std::string(e.what()).substr(e.field().size() + 2));
  }
  return config;
}

void apply_override(ProblemConfig& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(std::string(assignment), "override must have the form KEY=VALUE");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json doc = to_json(config);
  if (key == "lambda") {
    doc.erase("lambda1");
    doc.erase("lambda2");
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(key, "malformed key");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) fail(key, "is not an object");
    node = &child;
    start = dot + 1;
  }
  ProblemConfig updated;
  read_problem(doc, updated);
  updated.validate();
  config = std::move(updated);
}

json to_json(const StudyConfig& s) {
  return {{"kind", s.kind},         {"name", s.name},
          {"values", s.values},     {"ratio", s.ratio},
          {"domains", s.domains},   {"lambda_gamma", s.lambda_gamma},
          {"lambda2_gamma", s.lambda2_gamma}, {"M_values", s.M_values},
          {"warm_start", s.warm_start}};
}

json to_json(const ProblemConfig& c) {
  json j = {{"eps", c.eps},
            {"gamma", c.gamma},
            {"lambda1", c.lambda1},
            {"lambda2", c.lambda2},
            {"N", c.N},
            {"M", c.M},
            {"Nq", c.angular_nodes()},
            {"Mq", c.radial_max_index()},
            {"material", {{"tag", c.material.tag}, {"p", c.material.p}, {"kappa", c.material.kappa}}},
            {"solver",
             {{"tol_start", c.solver.tol_start},
              {"tol_final", c.solver.tol_final},
              {"tol_shrink", c.solver.tol_shrink},
              {"step_grow", c.solver.step_grow},
              {"step_shrink", c.solver.step_shrink},
              {"step_min", c.solver.step_min},
              {"max_outer_iterations", c.solver.max_outer_iterations},
              {"broyden_skip", c.solver.broyden_skip}}},
            {"seed_mode", solver::to_string(c.seed_mode)},
            {"seed_polish",
             {{"max_iterations", c.seed_polish.max_iterations}, {"target", c.seed_polish.target}}},
            {"oracle_grid", c.oracle_grid}};
  if (c.study) j["study"] = to_json(*c.study);
  return j;
}

model::MaterialModel make_material(const MaterialConfig& material) {
  return model::default_material(material.p, material.kappa);
}

model::BoundaryStretch make_stretch(const ProblemConfig& config) {
  return {config.lambda1, config.lambda2};
}

assembly::Discretization make_discretization(const ProblemConfig& config) {
  config.validate();
  const model::AnnulusDomain domain(config.eps, config.gamma);
  return {config.N,
          config.M,
          spectral::product_rule(config.angular_nodes(), config.radial_max_index()),
          domain,
          make_material(config.material),
          assembly::boundary_data(make_stretch(config), config.gamma, config.N)};
}

}  // namespace cavity::config
