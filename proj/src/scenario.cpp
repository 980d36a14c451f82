#include "scenevqa/scenario.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace scenevqa {

namespace {

constexpr std::array<std::string_view, kObjectKindCount> kKindNames = {
    "sedan", "SUV", "pickup", "truck", "bus",
    "pedestrian", "cyclist", "motorcycle", "traffic_cone", "barrier"};

constexpr std::array<std::string_view, kObjectKindCount> kKindPhrases = {
    "sedan", "SUV", "pickup", "truck", "bus",
    "pedestrian", "cyclist", "motorcycle", "traffic cone", "barrier"};

constexpr std::array<std::string_view, kObjectColorCount> kColorNames = {
    "white", "black", "gray", "red", "blue", "green", "yellow", "orange"};

constexpr std::array<std::string_view, 3> kSourceNames = {"real", "sim", "synthetic"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

double number(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path + "." + key, "non-finite number");
  return d;
}

std::string string_field(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec2 point(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw SchemaError(path, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

ObjectState parse_state(const Json& j, const std::string& path) {
  ObjectState st;
  st.pose.position = {number(j, "x", path), number(j, "y", path)};
  st.pose.heading = {number(j, "hx", path), number(j, "hy", path)};
  st.speed = number(j, "speed", path);
  st.half_extents = {0.5 * number(j, "len", path), 0.5 * number(j, "wid", path)};
  const Json& valid = require(j, "valid", path);
  if (!valid.is_boolean()) throw SchemaError(path + ".valid", "expected a boolean");
  st.valid = valid.get<bool>();
  return st;
}

Track parse_track(const Json& j, const std::string& path) {
  Track t;
  t.id = string_field(j, "id", path);
  const std::string kind = string_field(j, "kind", path);
  auto k = parse_kind(kind);
  if (!k) throw SchemaError(path + ".kind", "unknown kind '" + kind + "'");
  t.kind = *k;
  if (auto it = j.find("color"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(path + ".color", "expected a string");
    auto c = parse_color(it->get<std::string>());
    if (!c) throw SchemaError(path + ".color", "unknown color '" + it->get<std::string>() + "'");
    t.color = *c;
  }
  t.height = number(j, "height", path);
  const Json& states = require(j, "states", path);
  if (!states.is_array()) throw SchemaError(path + ".states", "expected an array");
  t.states.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    t.states.push_back(parse_state(states[i], path + ".states[" + std::to_string(i) + "]"));
  }
  return t;
}

}  // namespace

std::string_view to_string(ObjectKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(ObjectColor c) { return kColorNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(SourceTag t) { return kSourceNames[static_cast<std::size_t>(t)]; }
std::string_view kind_phrase(ObjectKind k) { return kKindPhrases[static_cast<std::size_t>(k)]; }

std::optional<ObjectKind> parse_kind(std::string_view s) {
  return lookup<ObjectKind>(kKindNames, s);
}
std::optional<ObjectColor> parse_color(std::string_view s) {
  return lookup<ObjectColor>(kColorNames, s);
}
std::optional<SourceTag> parse_source_tag(std::string_view s) {
  return lookup<SourceTag>(kSourceNames, s);
}

const Track& ScenarioRecord::ego() const {
  const Track* t = find_track(ego_id);
  if (t == nullptr) throw InvariantError("ego_id '" + ego_id + "' does not resolve");
  return *t;
}

const Track* ScenarioRecord::find_track(std::string_view track_id) const {
  for (const auto& t : tracks) {
    if (t.id == track_id) return &t;
  }
  return nullptr;
}

std::vector<Vec2> ScenarioRecord::ego_positions() const {
  std::vector<Vec2> out;
  const Track& e = ego();
  out.reserve(e.states.size());
  for (const auto& st : e.states) out.push_back(st.pose.position);
  return out;
}

bool ScenarioRecord::on_drivable(const Vec2& p) const {
  for (const auto& poly : drivable) {
    if (point_in_polygon(p, poly)) return true;
  }
  return false;
}

void CameraRig::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw InvariantError("camera fov must lie in (0, 180)");
  if (width <= 0 || height <= 0) throw InvariantError("camera resolution must be positive");
}

void validate_scenario(const ScenarioRecord& s) {
  if (std::abs(s.dt - kStepSeconds) > 1e-12) throw InvariantError("dt must be 0.1");
  if (s.horizon < 1) throw InvariantError("horizon must be >= 1");
  if (s.find_track(s.ego_id) == nullptr) {
    throw InvariantError("ego_id '" + s.ego_id + "' does not resolve");
  }
  std::set<std::string> ids;
  for (const auto& t : s.tracks) {
    if (!ids.insert(t.id).second) throw InvariantError("duplicate track id '" + t.id + "'");
    if (!(t.height > 0.0)) throw InvariantError("track '" + t.id + "' height must be > 0");
    if (static_cast<int>(t.states.size()) != s.horizon) {
      throw InvariantError("track '" + t.id + "' has " + std::to_string(t.states.size()) +
                           " states, horizon is " + std::to_string(s.horizon));
    }
    for (std::size_t i = 0; i < t.states.size(); ++i) {
      const auto& st = t.states[i];
      const std::string where = "track '" + t.id + "' step " + std::to_string(i);
      if (std::abs(norm(st.pose.heading) - 1.0) > 1e-9) {
        throw InvariantError(where + ": heading is not a unit vector");
      }
      if (!(st.speed >= 0.0)) throw InvariantError(where + ": speed must be >= 0");
      if (!(st.half_extents.x > 0.0 && st.half_extents.y > 0.0)) {
        throw InvariantError(where + ": extents must be > 0");
      }
    }
  }
  for (std::size_t i = 0; i < s.drivable.size(); ++i) {
    if (!is_simple_polygon(s.drivable[i])) {
      throw InvariantError("drivable[" + std::to_string(i) + "] is not a simple polygon");
    }
  }
}

ScenarioRecord parse_scenario(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("$", std::string("malformed JSON: ") + e.what());
  }
  const std::string root = "$";
  ScenarioRecord s;
  s.id = string_field(j, "id", root);
  s.dt = number(j, "dt", root);
  const Json& horizon = require(j, "horizon", root);
  if (!horizon.is_number_integer()) throw SchemaError("$.horizon", "expected an integer");
  s.horizon = horizon.get<int>();
  s.ego_id = string_field(j, "ego_id", root);

  const Json& tracks = require(j, "tracks", root);
  if (!tracks.is_array()) throw SchemaError("$.tracks", "expected an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const std::string path = "$.tracks[" + std::to_string(i) + "]";
    Track t = parse_track(tracks[i], path);
    if (!seen.insert(t.id).second) throw SchemaError(path + ".id", "duplicate track id '" + t.id + "'");
    s.tracks.push_back(std::move(t));
  }

  const Json& drivable = require(j, "drivable", root);
  if (!drivable.is_array()) throw SchemaError("$.drivable", "expected an array");
  for (std::size_t i = 0; i < drivable.size(); ++i) {
    const std::string path = "$.drivable[" + std::to_string(i) + "]";
    if (!drivable[i].is_array()) throw SchemaError(path, "expected an array of points");
    Polygon poly;
    for (std::size_t k = 0; k < drivable[i].size(); ++k) {
      poly.push_back(point(drivable[i][k], path + "[" + std::to_string(k) + "]"));
    }
    s.drivable.push_back(std::move(poly));
  }

  s.destination = point(require(j, "destination", root), "$.destination");
  const std::string tag = string_field(j, "source_tag", root);
  auto t = parse_source_tag(tag);
  if (!t) throw SchemaError("$.source_tag", "unknown source tag '" + tag + "'");
  s.source_tag = *t;

  validate_scenario(s);
  return s;
}

ScenarioRecord load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioRecord& s) {
  OrderedJson j;
  j["id"] = s.id;
  j["dt"] = s.dt;
  j["horizon"] = s.horizon;
  j["ego_id"] = s.ego_id;
  OrderedJson tracks = OrderedJson::array();
  for (const auto& t : s.tracks) {
    OrderedJson jt;
    jt["id"] = t.id;
    jt["kind"] = std::string(to_string(t.kind));
    if (t.color) jt["color"] = std::string(to_string(*t.color));
    jt["height"] = t.height;
    OrderedJson states = OrderedJson::array();
    for (const auto& st : t.states) {
      OrderedJson js;
      js["x"] = st.pose.position.x;
      js["y"] = st.pose.position.y;
      js["hx"] = st.pose.heading.x;
      js["hy"] = st.pose.heading.y;
      js["speed"] = st.speed;
      js["len"] = 2.0 * st.half_extents.x;
      js["wid"] = 2.0 * st.half_extents.y;
      js["valid"] = st.valid;
      states.push_back(std::move(js));
    }
    jt["states"] = std::move(states);
    tracks.push_back(std::move(jt));
  }
  j["tracks"] = std::move(tracks);
  OrderedJson drivable = OrderedJson::array();
  for (const auto& poly : s.drivable) {
    OrderedJson jp = OrderedJson::array();
    for (const auto& p : poly) jp.push_back({p.x, p.y});
    drivable.push_back(std::move(jp));
  }
  j["drivable"] = std::move(drivable);
  j["destination"] = {s.destination.x, s.destination.y};
  j["source_tag"] = std::string(to_string(s.source_tag));
  return j.dump(2) + "\n";
}

void save_scenario(const ScenarioRecord& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_scenario(s);
  if (!out) throw IoError("failed writing " + path.string());
}

FrameSnapshot frame_at(const ScenarioRecord& s, int step) {
  if (step < 0 || step >= s.horizon) {
    throw OutOfRange("step " + std::to_string(step) + " outside [0, " +
                     std::to_string(s.horizon) + ")");
  }
  FrameSnapshot f;
  f.scenario_id = s.id;
  f.step = step;
  f.source_tag = s.source_tag;
  for (const auto& t : s.tracks) {
    const auto& st = t.states[static_cast<std::size_t>(step)];
    FrameObject obj{t.id, t.kind, t.color, t.height, st};
    if (t.id == s.ego_id) {
      f.ego = std::move(obj);
    } else if (st.valid) {
      f.others.push_back(std::move(obj));
    }
  }
  return f;
}

Vec2 to_ego_frame(const Pose2D& ego, const Vec2& p) {
  const Vec2 d = p - ego.position;
  return {dot(d, ego.heading), dot(d, rot90ccw(ego.heading))};
}

Vec2 from_ego_frame(const Pose2D& ego, const Vec2& local) {
  return ego.position + ego.heading * local.x + rot90ccw(ego.heading) * local.y;
}

}  // namespace scenevqa
