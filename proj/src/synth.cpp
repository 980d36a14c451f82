#include "scenevqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "scenevqa/rng.hpp"

namespace scenevqa {

namespace {

struct Footprint {
  double length;
  double width;
  double height;
};

Footprint footprint(ObjectKind k) {
  switch (k) {
    case ObjectKind::kSedan: return {4.5, 1.9, 1.5};
    case ObjectKind::kSuv: return {4.8, 2.0, 1.8};
    case ObjectKind::kPickup: return {5.3, 2.0, 1.9};
    case ObjectKind::kTruck: return {8.0, 2.5, 3.2};
    case ObjectKind::kBus: return {11.0, 2.6, 3.2};
    case ObjectKind::kPedestrian: return {0.6, 0.6, 1.75};
    case ObjectKind::kCyclist: return {1.8, 0.6, 1.7};
    case ObjectKind::kMotorcycle: return {2.1, 0.8, 1.5};
    case ObjectKind::kTrafficCone: return {0.4, 0.4, 0.7};
    case ObjectKind::kBarrier: return {2.0, 0.5, 1.0};
  }
  return {1.0, 1.0, 1.0};
}

constexpr ObjectKind kVehicleKinds[] = {ObjectKind::kSedan, ObjectKind::kSedan, ObjectKind::kSuv,
                                        ObjectKind::kPickup, ObjectKind::kTruck, ObjectKind::kBus};

constexpr double kLane = 3.5;

Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

struct Builder {
  ScenarioRecord s;
  Rng rng;
  bool colored{true};
  int next_id{0};

  Builder(std::string id, int horizon, std::uint64_t seed) : rng(seed) {
    s.id = std::move(id);
    s.horizon = horizon;
    s.dt = kStepSeconds;
    s.source_tag = SourceTag::kSynthetic;
  }

  std::optional<ObjectColor> pick_color() {
    if (!colored) return std::nullopt;
    return static_cast<ObjectColor>(rng.index(kObjectColorCount));
  }

  ObjectKind pick_vehicle() { return kVehicleKinds[rng.index(std::size(kVehicleKinds))]; }

  std::string make_id(std::string_view prefix) {
    return std::string(prefix) + "_" + std::to_string(next_id++);
  }

  // Track whose pose at each step comes from `path(t)` -> (position, heading, speed).
  void add_track(ObjectKind kind, std::string_view prefix,
                 const std::function<std::pair<Pose2D, double>(double)>& path,
                 int valid_from = 0, int valid_to = -1) {
    const Footprint fp = footprint(kind);
    Track t;
    t.id = make_id(prefix);
    t.kind = kind;
    const bool has_color = kind != ObjectKind::kTrafficCone && kind != ObjectKind::kBarrier &&
                           kind != ObjectKind::kPedestrian;
    t.color = has_color ? pick_color() : std::nullopt;
    if (!has_color && colored) {
      t.color = kind == ObjectKind::kTrafficCone ? ObjectColor::kOrange : ObjectColor::kGray;
      if (kind == ObjectKind::kPedestrian) t.color = pick_color();
    }
    t.height = fp.height;
    const int last = valid_to < 0 ? s.horizon - 1 : valid_to;
    for (int k = 0; k < s.horizon; ++k) {
      auto [pose, speed] = path(k * kStepSeconds);
      ObjectState st;
      st.pose = pose;
      st.speed = speed;
      st.half_extents = {fp.length / 2.0, fp.width / 2.0};
      st.valid = k >= valid_from && k <= last;
      t.states.push_back(st);
    }
    s.tracks.push_back(std::move(t));
  }

  void add_constant_velocity(ObjectKind kind, std::string_view prefix, Vec2 start, Vec2 heading,
                             double speed, int valid_from = 0, int valid_to = -1) {
    heading = normalized(heading);
    add_track(
        kind, prefix,
        [=](double t) { return std::make_pair(Pose2D{start + heading * (speed * t), heading}, speed); },
        valid_from, valid_to);
  }

  void add_static(ObjectKind kind, std::string_view prefix, Vec2 at, Vec2 heading) {
    add_constant_velocity(kind, prefix, at, heading, 0.0);
  }

  void add_ego(const EgoState& start, const std::vector<std::string>& script,
               const ActionCatalog& catalog, const VehicleParams& params) {
    Track ego;
    ego.id = "ego";
    ego.kind = ObjectKind::kSedan;
    ego.color = colored ? std::optional(ObjectColor::kWhite) : std::nullopt;
    const Footprint fp = footprint(ObjectKind::kSedan);
    ego.height = fp.height;
    std::vector<EgoState> log{start};
    for (std::size_t d = 0; static_cast<int>(log.size()) < s.horizon; ++d) {
      const std::string& action = script[std::min(d, script.size() - 1)];
      const int n = std::min(kStepsPerDecision, s.horizon - static_cast<int>(log.size()));
      auto seg = rollout(log.back(), action, n, catalog, params);
      log.insert(log.end(), seg.begin() + 1, seg.end());
    }
    for (const auto& e : log) {
      ObjectState st;
      st.pose = e.pose;
      st.speed = e.speed;
      st.half_extents = {fp.length / 2.0, fp.width / 2.0};
      st.valid = true;
      ego.states.push_back(st);
    }
    s.ego_id = ego.id;
    s.destination = log.back().pose.position;
    s.tracks.insert(s.tracks.begin(), std::move(ego));
  }
};

int horizon_for(std::uint64_t seed) { return 90 + static_cast<int>(seed % 4); }

std::vector<std::string> repeat(std::initializer_list<std::pair<const char*, int>> runs) {
  std::vector<std::string> out;
  for (const auto& [name, n] : runs) out.insert(out.end(), static_cast<std::size_t>(n), name);
  return out;
}

Rng script_rng(std::string_view layout, std::uint64_t seed) {
  return Rng(derive_seed(seed, std::string(layout) + "/script"));
}

double initial_speed(std::string_view layout, std::uint64_t seed) {
  Rng r = script_rng(layout, seed);
  r.next();
  return layout == "intersection" ? 0.0 : 6.0 + 3.0 * r.uniform();
}

// Three-lane road along +x, lane centres at y = -3.5, 0, 3.5.
Polygon straight_road_polygon() { return rect(-40.0, -1.5 * kLane, 260.0, 1.5 * kLane); }

ScenarioRecord build_straight_road(std::uint64_t seed, const VehicleParams& vp,
                                   const ActionCatalog& cat) {
  Builder b("straight_road_" + std::to_string(seed), horizon_for(seed),
            derive_seed(seed, "straight_road"));
  b.s.drivable = {straight_road_polygon()};
  const double v0 = initial_speed("straight_road", seed);
  b.add_ego({{{0.0, 0.0}, {1.0, 0.0}}, v0}, synth_ego_script("straight_road", seed), cat, vp);

  // One speed per side lane and >= 14 m spacing, so lane traffic never closes up.
  const double lane_speed[2] = {b.rng.uniform(4.0, 11.0), b.rng.uniform(4.0, 11.0)};
  const int n_side = 3 + static_cast<int>(b.rng.index(3));
  for (int i = 0; i < n_side; ++i) {
    const std::size_t side = b.rng.index(2);
    const double x0 = -5.0 + 20.0 * i + b.rng.uniform(-3.0, 3.0);
    b.add_constant_velocity(b.pick_vehicle(), "veh", {x0, (side == 0 ? 1.0 : -1.0) * kLane}, {1.0, 0.0},
                            lane_speed[side]);
  }
  // Faster leader in the ego lane; never caught up.
  b.add_constant_velocity(b.pick_vehicle(), "veh", {b.rng.uniform(35.0, 55.0), 0.0}, {1.0, 0.0},
                          v0 + b.rng.uniform(3.0, 5.0));
  // Parked car on the shoulder that leaves view partway through the log.
  b.add_static(ObjectKind::kSedan, "veh", {b.rng.uniform(15.0, 30.0), 1.5 * kLane + 1.6}, {1.0, 0.0});
  b.s.tracks.back().color = b.pick_color();
  for (int k = b.s.horizon / 2; k < b.s.horizon; ++k) b.s.tracks.back().states[k].valid = false;
  // Pedestrian on the sidewalk.
  b.add_constant_velocity(ObjectKind::kPedestrian, "ped", {b.rng.uniform(10.0, 40.0), -1.5 * kLane - 2.0},
                          {1.0, 0.0}, 1.3);
  return b.s;
}

// Plus-shaped junction centred at the origin; roads 14 m wide.
Polygon junction_polygon() {
  const double w = 8.0;
  const double l = 90.0;
  return {{-l, -w}, {-w, -w}, {-w, -l}, {w, -l}, {w, -w}, {l, -w},
          {l, w},   {w, w},   {w, l},   {-w, l}, {-w, w}, {-l, w}};
}

ScenarioRecord build_intersection(std::uint64_t seed, const VehicleParams& vp,
                                  const ActionCatalog& cat) {
  Builder b("intersection_" + std::to_string(seed), horizon_for(seed),
            derive_seed(seed, "intersection"));
  b.s.drivable = {junction_polygon()};
  b.add_ego({{{-22.0, -kLane / 2.0 - 0.5}, {1.0, 0.0}}, 0.0}, synth_ego_script("intersection", seed),
            cat, vp);

  // Cross traffic leaving the junction.
  b.add_constant_velocity(b.pick_vehicle(), "veh", {kLane / 2.0, 14.0 + b.rng.uniform(0.0, 8.0)},
                          {0.0, 1.0}, b.rng.uniform(5.0, 9.0));
  b.add_constant_velocity(b.pick_vehicle(), "veh", {-kLane / 2.0, -14.0 - b.rng.uniform(0.0, 8.0)},
                          {0.0, -1.0}, b.rng.uniform(5.0, 9.0));
  // Oncoming traffic on the far side of the horizontal road.
  b.add_constant_velocity(b.pick_vehicle(), "veh", {b.rng.uniform(25.0, 45.0), kLane / 2.0 + 0.5},
                          {-1.0, 0.0}, b.rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 3.0, 0, b.s.horizon / 3);
  // Queued vehicles waiting on the vertical road.
  const int queued = 1 + static_cast<int>(b.rng.index(3));
  for (int i = 0; i < queued; ++i) {
    b.add_static(b.pick_vehicle(), "veh", {-kLane / 2.0 - 0.3, 20.0 + 13.0 * i}, {0.0, -1.0});
  }
  // Pedestrians at the corners, one cyclist on the shoulder.
  b.add_static(ObjectKind::kPedestrian, "ped", {-10.0, -10.0 - b.rng.uniform(0.0, 3.0)}, {0.0, 1.0});
  b.add_constant_velocity(ObjectKind::kPedestrian, "ped", {10.5, b.rng.uniform(-12.0, -9.5)},
                          {1.0, 0.0}, 1.2);
  b.add_constant_velocity(ObjectKind::kCyclist, "cyc", {-40.0, -6.8}, {1.0, 0.0}, 4.0);
  return b.s;
}

ScenarioRecord build_cut_in(std::uint64_t seed, const VehicleParams& vp, const ActionCatalog& cat) {
  Builder b("cut_in_" + std::to_string(seed), horizon_for(seed), derive_seed(seed, "cut_in"));
  b.s.drivable = {straight_road_polygon()};
  const double v0 = initial_speed("cut_in", seed);
  b.add_ego({{{0.0, 0.0}, {1.0, 0.0}}, v0}, synth_ego_script("cut_in", seed), cat, vp);

  // The cutting vehicle moves from the left lane across the ego lane centre.
  const double side = seed % 2 == 0 ? 1.0 : -1.0;
  const double x0 = b.rng.uniform(10.0, 16.0);
  const double v = v0 + b.rng.uniform(1.5, 3.0);
  const double t_start = b.rng.uniform(1.0, 2.0);
  const double t_dur = b.rng.uniform(1.6, 2.4);
  const double y_from = side * kLane;
  const double y_to = -side * 0.6;
  b.add_track(b.pick_vehicle(), "veh", [=](double t) {
    double y = y_from;
    double vy = 0.0;
    if (t >= t_start + t_dur) {
      y = y_to;
    } else if (t > t_start) {
      const double u = (t - t_start) / t_dur;
      y = y_from + (y_to - y_from) * 0.5 * (1.0 - std::cos(kPi * u));
      vy = (y_to - y_from) * 0.5 * kPi / t_dur * std::sin(kPi * u);
    }
    const Vec2 vel{v, vy};
    return std::make_pair(Pose2D{{x0 + v * t, y}, normalized(vel)}, norm(vel));
  });
  b.add_constant_velocity(b.pick_vehicle(), "veh", {b.rng.uniform(-20.0, -8.0), -side * kLane},
                          {1.0, 0.0}, v0 + b.rng.uniform(0.5, 2.0));
  b.add_static(ObjectKind::kTrafficCone, "cone", {b.rng.uniform(30.0, 45.0), -side * (1.5 * kLane + 0.4)},
               {1.0, 0.0});
  b.add_constant_velocity(ObjectKind::kMotorcycle, "moto", {b.rng.uniform(35.0, 50.0), side * kLane},
                          {1.0, 0.0}, v0 + 1.0);
  return b.s;
}

ScenarioRecord build_static_obstacles(std::uint64_t seed, const VehicleParams& vp,
                                      const ActionCatalog& cat) {
  Builder b("static_obstacles_" + std::to_string(seed), horizon_for(seed),
            derive_seed(seed, "static_obstacles"));
  // Colorless, like annotations converted from real logs.
  b.colored = false;
  b.s.drivable = {straight_road_polygon()};
  const double v0 = initial_speed("static_obstacles", seed);
  b.add_ego({{{0.0, 0.0}, {1.0, 0.0}}, v0}, synth_ego_script("static_obstacles", seed), cat, vp);

  const int n = 6 + static_cast<int>(b.rng.index(5));
  for (int i = 0; i < n; ++i) {
    const double x = 8.0 + 9.0 * i + b.rng.uniform(-2.0, 2.0);
    const double lane = (b.rng.index(2) == 0 ? 1.0 : -1.0) * kLane + b.rng.uniform(-0.8, 0.8);
    const auto kind = b.rng.index(3) == 0 ? ObjectKind::kBarrier : ObjectKind::kTrafficCone;
    const Vec2 h = kind == ObjectKind::kBarrier ? Vec2{0.0, 1.0} : Vec2{1.0, 0.0};
    b.add_static(kind, kind == ObjectKind::kBarrier ? "barrier" : "cone", {x, lane}, h);
  }
  b.add_static(ObjectKind::kTruck, "veh", {b.rng.uniform(40.0, 60.0), 1.5 * kLane + 2.0}, {1.0, 0.0});
  b.add_constant_velocity(ObjectKind::kCyclist, "cyc", {b.rng.uniform(5.0, 20.0), -1.5 * kLane - 1.2},
                          {1.0, 0.0}, 4.5);
  b.add_constant_velocity(b.pick_vehicle(), "veh", {b.rng.uniform(100.0, 115.0), kLane}, {-1.0, 0.0}, 0.0);
  return b.s;
}

}  // namespace

const std::vector<std::string>& synth_layouts() {
  static const std::vector<std::string> kLayouts = {"straight_road", "intersection", "cut_in",
                                                    "static_obstacles"};
  return kLayouts;
}

std::vector<std::string> synth_ego_script(std::string_view layout, std::uint64_t seed) {
  Rng r = script_rng(layout, seed);
  if (layout == "straight_road") return repeat({{"KEEP_STRAIGHT", 19}});
  if (layout == "intersection") {
    if (seed % 2 == 0) return repeat({{"SPEED_UP", 6}, {"KEEP_STRAIGHT", 13}});
    // Left turn through the junction.
    return repeat({{"SPEED_UP", 6}, {"KEEP_STRAIGHT", 2}, {"TURN_LEFT", 4}, {"KEEP_STRAIGHT", 7}});
  }
  if (layout == "cut_in") {
    const int react = 3 + static_cast<int>(r.index(2));
    return repeat({{"KEEP_STRAIGHT", react}, {"BRAKE", 2}, {"KEEP_STRAIGHT", 19 - react - 2}});
  }
  if (layout == "static_obstacles") {
    return repeat({{"SPEED_UP", 2}, {"KEEP_STRAIGHT", 17}});
  }
  throw UnknownLayout("unknown layout '" + std::string(layout) + "'");
}

ScenarioRecord synth_scenario(std::string_view layout, std::uint64_t seed, const VehicleParams& params,
                              const ActionCatalog& catalog) {
  ScenarioRecord s;
  if (layout == "straight_road") {
    s = build_straight_road(seed, params, catalog);
  } else if (layout == "intersection") {
    s = build_intersection(seed, params, catalog);
  } else if (layout == "cut_in") {
    s = build_cut_in(seed, params, catalog);
  } else if (layout == "static_obstacles") {
    s = build_static_obstacles(seed, params, catalog);
  } else {
    throw UnknownLayout("unknown layout '" + std::string(layout) + "'");
  }
  validate_scenario(s);
  return s;
}

std::vector<ScenarioRecord> synth_suite() {
  const std::pair<const char*, std::uint64_t> picks[] = {
      {"straight_road", 0}, {"straight_road", 1}, {"straight_road", 2}, {"intersection", 0},
      {"intersection", 1},  {"cut_in", 0},        {"cut_in", 1},        {"cut_in", 2},
      {"static_obstacles", 0}, {"static_obstacles", 1}};
  std::vector<ScenarioRecord> out;
  for (const auto& [layout, seed] : picks) out.push_back(synth_scenario(layout, seed));
  return out;
}

std::vector<ScenarioRecord> synth_corpus(int seeds_per_layout) {
  std::vector<ScenarioRecord> out;
  for (const auto& layout : synth_layouts()) {
    for (int s = 0; s < seeds_per_layout; ++s) {
      out.push_back(synth_scenario(layout, static_cast<std::uint64_t>(s)));
    }
  }
  return out;
}

}  // namespace scenevqa
