#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenevqa/dataset.hpp"
#include "scenevqa/harness.hpp"

namespace scenevqa {

/// Bad configuration or command-line usage; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSON file with a section per module. Every key is optional; unknown
/// keys are rejected so typos do not silently fall back to defaults.
struct RunConfig {
  std::optional<std::filesystem::path> scenario_dir;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  int jobs{0};  // 0 = all logical cores

  DatasetConfig dataset;  // qa quotas, splits, generation camera, visibility, vocab, vehicle, actions
  HarnessConfig harness;  // closed-loop camera; shares vocab, vehicle, actions, visibility
  std::string agent{"straight"};
  RemoteAgentOptions remote;

  /// Throws ConfigError.
  static RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  /// Cross-field checks and path existence.
  void validate() const;
};

/// Scenario files (*.json) in a directory, in file-name order. Throws
/// ConfigError when the directory is missing or holds no scenarios.
std::vector<ScenarioRecord> load_scenario_dir(const std::filesystem::path& dir);

}  // namespace scenevqa
