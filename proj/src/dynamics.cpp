#include "scenevqa/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scenevqa {

void VehicleParams::validate() const {
  const double all[] = {s_max_deg, f_max, b_max, wheelbase, v_max, max_accel, max_decel};
  for (double v : all) {
    if (!(v > 0.0)) throw InvariantError("vehicle parameters must be positive");
  }
  if (!(drag >= 0.0)) throw InvariantError("drag must be non-negative");
}

ActionCatalog::ActionCatalog(std::vector<Entry> entries) : entries_(std::move(entries)) {
  if (find(kKeepStraight) == nullptr) {
    throw InvariantError("action catalog must contain KEEP_STRAIGHT");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (std::abs(e.action.a1) > 1.0 || std::abs(e.action.a2) > 1.0) {
      throw InvariantError("action '" + e.name + "' leaves [-1, 1]^2");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (entries_[k].name == e.name) throw InvariantError("duplicate action '" + e.name + "'");
    }
  }
}

ActionCatalog ActionCatalog::default_catalog() {
  return ActionCatalog({
      {"TURN_LEFT", {0.5, 0.0}},
      {"TURN_RIGHT", {-0.5, 0.0}},
      {"KEEP_STRAIGHT", {0.0, 0.0}},
      {"SPEED_UP", {0.0, 0.6}},
      {"BRAKE", {0.0, -0.6}},
      {"BIG_LEFT", {1.0, 0.0}},
      {"BIG_RIGHT", {-1.0, 0.0}},
      {"STOP", {0.0, -1.0}},
  });
}

const NormalizedAction* ActionCatalog::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.action;
  }
  return nullptr;
}

const NormalizedAction& ActionCatalog::at(std::string_view name) const {
  const NormalizedAction* a = find(name);
  if (a == nullptr) throw UnknownAction("unknown action '" + std::string(name) + "'");
  return *a;
}

ControlSignal map_action(const NormalizedAction& a, const VehicleParams& p) {
  if (!(std::abs(a.a1) <= 1.0) || !(std::abs(a.a2) <= 1.0)) {
    throw OutOfRange("normalized action outside [-1, 1]^2");
  }
  ControlSignal c;
  c.steer_deg = p.s_max_deg * a.a1;
  c.accel = p.f_max * std::max(0.0, a.a2);
  c.brake = -p.b_max * std::min(0.0, a.a2);
  return c;
}

EgoState step(const EgoState& s, const ControlSignal& c, const VehicleParams& p, double dt) {
  EgoState next;
  const double dv = p.accel_gain() * c.accel - p.brake_gain() * c.brake - p.drag * s.speed;
  next.speed = std::clamp(s.speed + dv * dt, 0.0, p.v_max);
  const double yaw_rate = s.speed / p.wheelbase * std::tan(deg_to_rad(c.steer_deg));
  // Renormalize so the heading stays unit length over long rollouts.
  next.pose.heading = normalized(rotate(s.pose.heading, yaw_rate * dt));
  next.pose.position = s.pose.position + next.pose.heading * (next.speed * dt);
  return next;
}

std::vector<EgoState> rollout(const EgoState& s, std::string_view action, int n_steps,
                              const ActionCatalog& catalog, const VehicleParams& p) {
  const ControlSignal c = map_action(catalog.at(action), p);
  std::vector<EgoState> traj;
  traj.reserve(static_cast<std::size_t>(std::max(0, n_steps)) + 1);
  traj.push_back(s);
  for (int i = 0; i < n_steps; ++i) traj.push_back(step(traj.back(), c, p));
  return traj;
}

namespace {

void check_box(const OrientedBox& b) {
  if (!(b.half_extents.x > 0.0 && b.half_extents.y > 0.0) ||
      std::abs(norm(b.heading) - 1.0) > 1e-6) {
    throw DegenerateBox("oriented box has zero extent or a non-unit heading");
  }
}

// Interval of a box's corners projected on `axis`.
std::pair<double, double> project(const Corners& c, const Vec2& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : c) {
    const double d = dot(v, axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace

bool obb_overlap(const OrientedBox& a, const OrientedBox& b) {
  check_box(a);
  check_box(b);
  const Corners ca = a.corners();
  const Corners cb = b.corners();
  const Vec2 axes[] = {a.heading, rot90ccw(a.heading), b.heading, rot90ccw(b.heading)};
  for (const auto& axis : axes) {
    const auto [alo, ahi] = project(ca, axis);
    const auto [blo, bhi] = project(cb, axis);
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

Reconstruction reconstruct_actions(std::span<const EgoState> log, const ActionCatalog& catalog,
                                   const VehicleParams& p) {
  if (log.size() < 6) {
    throw TooShort("trajectory needs at least 6 states, got " + std::to_string(log.size()));
  }
  Reconstruction out;
  out.simulated.reserve(log.size());
  out.simulated.push_back(log.front());

  const std::size_t last = log.size() - 1;
  std::size_t t = 0;
  while (t < last) {
    const std::size_t target = std::min(t + kStepsPerDecision, last);
    const int n = static_cast<int>(target - t);
    const Vec2 goal = log[target].pose.position;

    std::vector<EgoState> best;
    double best_dev = std::numeric_limits<double>::infinity();
    const std::string* best_name = nullptr;
    for (const auto& e : catalog.entries()) {
      auto traj = rollout(out.simulated.back(), e.name, n, catalog, p);
      const double dev = distance(traj.back().pose.position, goal);
      // Strict comparison keeps the first-declared action on ties.
      if (dev < best_dev) {
        best_dev = dev;
        best = std::move(traj);
        best_name = &e.name;
      }
    }
    out.actions.push_back(*best_name);
    out.simulated.insert(out.simulated.end(), best.begin() + 1, best.end());
    t = target;
  }

  out.step_deviation.reserve(log.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double d = distance(out.simulated[i].pose.position, log[i].pose.position);
    out.step_deviation.push_back(d);
    sum += d;
    out.max_deviation = std::max(out.max_deviation, d);
  }
  out.mean_deviation = sum / static_cast<double>(log.size());
  return out;
}

}  // namespace scenevqa
