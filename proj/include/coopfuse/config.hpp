#pragma once

#include "coopfuse/engine.hpp"
#include "coopfuse/sim.hpp"

#include <filesystem>
#include <string>

namespace coopfuse::config {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Strict parsers: unknown keys are rejected, schema_version must be 1.
sim::Scenario load_scenario(const std::filesystem::path& path);
engine::RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace coopfuse::config
