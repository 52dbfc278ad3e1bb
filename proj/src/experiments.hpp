#pragma once

#include "stochflow/config.hpp"
#include "stochflow/harness.hpp"

#include <filesystem>

namespace stochflow::detail {

/// Executes one named experiment, writing its CSV files into `dir`.
ExperimentResult run_body(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace stochflow::detail
