#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scenevqa/geometry.hpp"
#include "scenevqa/scenario.hpp"

namespace scenevqa {

class UnknownAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TooShort : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vehicle configuration. `s_max_deg`, `f_max` and `b_max` are the scales of
/// the normalized-action mapping; `max_accel` and `max_decel` convert full
/// throttle / full brake into m/s^2.
struct VehicleParams {
  double s_max_deg{40.0};
  double f_max{150.0};
  double b_max{200.0};
  double wheelbase{2.8};
  double v_max{25.0};
  double max_accel{4.0};
  double max_decel{8.0};
  double drag{0.05};

  double accel_gain() const { return max_accel / f_max; }
  double brake_gain() const { return max_decel / b_max; }
  void validate() const;
};

struct NormalizedAction {
  double a1{0.0};  // steering, +1 = full left
  double a2{0.0};  // throttle (+) / brake (-)

  friend bool operator==(const NormalizedAction&, const NormalizedAction&) = default;
};

struct ControlSignal {
  double steer_deg{0.0};
  double accel{0.0};
  double brake{0.0};
};

/// Named discrete actions in declaration order. Declaration order is the
/// tie-break order wherever actions are ranked.
class ActionCatalog {
 public:
  struct Entry {
    std::string name;
    NormalizedAction action;
  };

  ActionCatalog() = default;
  explicit ActionCatalog(std::vector<Entry> entries);

  static ActionCatalog default_catalog();

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const NormalizedAction* find(std::string_view name) const;
  const NormalizedAction& at(std::string_view name) const;

 private:
  std::vector<Entry> entries_;
};

inline constexpr std::string_view kKeepStraight = "KEEP_STRAIGHT";

struct EgoState {
  Pose2D pose;
  double speed{0.0};
};

/// Throws OutOfRange if `a` leaves [-1, 1]^2.
ControlSignal map_action(const NormalizedAction& a, const VehicleParams& p);

/// One kinematic bicycle step of `dt` seconds.
EgoState step(const EgoState& s, const ControlSignal& c, const VehicleParams& p,
              double dt = kStepSeconds);

/// Returns n_steps + 1 states, the first being `s`.
std::vector<EgoState> rollout(const EgoState& s, std::string_view action, int n_steps,
                              const ActionCatalog& catalog, const VehicleParams& p);

/// Separating-axis test; boxes that only touch count as overlapping.
bool obb_overlap(const OrientedBox& a, const OrientedBox& b);

struct Reconstruction {
  std::vector<std::string> actions;   // one per decision
  std::vector<EgoState> simulated;    // same length as the input log
  std::vector<double> step_deviation; // |simulated_i - logged_i| per step
  double mean_deviation{0.0};
  double max_deviation{0.0};
};

/// Greedy, autoregressive reconstruction of a logged trajectory as a sequence
/// of catalog actions held for five steps each. The simulation starts from
/// log[0]; at each decision the action whose execution lands closest to the
/// logged position at the end of the window is kept and the simulated state
/// advances with it. Throws TooShort for logs with fewer than six states.
Reconstruction reconstruct_actions(std::span<const EgoState> log, const ActionCatalog& catalog,
                                   const VehicleParams& p);

}  // namespace scenevqa
