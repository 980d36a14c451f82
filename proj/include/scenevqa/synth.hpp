#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scenevqa/dynamics.hpp"
#include "scenevqa/scenario.hpp"

namespace scenevqa {

class UnknownLayout : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layout names accepted by synth_scenario.
const std::vector<std::string>& synth_layouts();

/// Deterministic desk-scale scenario. The ego log is produced by rolling out
/// catalog actions at the decision cadence, so it can be reconstructed
/// exactly with the same vehicle parameters.
ScenarioRecord synth_scenario(std::string_view layout, std::uint64_t seed,
                              const VehicleParams& params = {},
                              const ActionCatalog& catalog = ActionCatalog::default_catalog());

/// The action script behind a synthetic ego log, one entry per decision.
std::vector<std::string> synth_ego_script(std::string_view layout, std::uint64_t seed);

/// The bundled ten-scenario suite used for closed-loop smoke runs.
std::vector<ScenarioRecord> synth_suite();

/// A larger corpus: every layout crossed with seeds [0, seeds_per_layout).
std::vector<ScenarioRecord> synth_corpus(int seeds_per_layout);

}  // namespace scenevqa
