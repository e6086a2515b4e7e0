#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace cavity::analysis {

struct StudyResult {
  nlohmann::json summary;           ///< rows, fits and diagnostics
  bool all_ok = false;              ///< every row solved to tolerance
  std::vector<std::filesystem::path> files;
};

/// Runs config.study, writing `<name>.dat` figure tables, per-row reports
/// under `<name>_rows/` and `<name>.json` into out_dir. Cold-started rows run
/// on up to `threads` workers; warm-started stretch sweeps run in order.
/// Throws config::ConfigError when config.study is missing.
[[nodiscard]] StudyResult run_study(const config::ProblemConfig& config,
                                    const std::filesystem::path& out_dir, int threads = 1);

}  // namespace cavity::analysis
