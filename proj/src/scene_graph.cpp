#include "scenevqa/scene_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "scenevqa/dynamics.hpp"

namespace scenevqa {

namespace {

constexpr std::array<std::string_view, 8> kEdgeNames = {"l", "lb", "lf", "b", "f", "r", "rb", "rf"};
constexpr std::array<std::string_view, 8> kEdgePhrases = {
    "to the left of",  "to the left and behind", "to the left and in front of",
    "behind",          "in front of",            "to the right of",
    "to the right and behind", "to the right and in front of"};
constexpr std::array<std::string_view, 8> kSectorNames = {
    "front", "front-right", "right", "rear-right", "rear", "rear-left", "left", "front-left"};
constexpr std::array<std::string_view, 5> kExtremeNames = {"closest", "leftmost", "rightmost",
                                                           "frontmost", "backmost"};

void check_corners(const Corners& c) {
  if (!(std::abs(signed_area(c)) > 1e-12)) throw DegenerateBox("box has zero area");
}

std::pair<double, double> extent_along(const Corners& c, const Vec2& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : c) {
    const double d = dot(p, axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

// Strict separation of B beyond A along `axis`.
Sidedness separation(const Corners& a, const Corners& b, const Vec2& axis) {
  check_corners(a);
  check_corners(b);
  const auto [alo, ahi] = extent_along(a, axis);
  const auto [blo, bhi] = extent_along(b, axis);
  if (blo > ahi) return Sidedness::kLeft;
  if (bhi < alo) return Sidedness::kRight;
  return Sidedness::kNone;
}

double sort_key(const SceneNode& n, Extreme e) {
  switch (e) {
    case Extreme::kClosest: return n.distance;
    case Extreme::kLeftmost: return -n.ego_center.y;
    case Extreme::kRightmost: return n.ego_center.y;
    case Extreme::kFrontmost: return -n.ego_center.x;
    case Extreme::kBackmost: return n.ego_center.x;
  }
  return 0.0;
}

SceneNode make_node(const FrameObject& obj, int label, const Pose2D& ego) {
  SceneNode n;
  n.label = label;
  n.track_id = obj.track_id;
  n.kind = obj.kind;
  n.color = obj.color;
  n.height = obj.height;
  n.corners = obj.state.box().corners();
  n.position = obj.state.pose.position;
  n.heading = obj.state.pose.heading;
  n.speed = obj.state.speed;
  n.ego_center = to_ego_frame(ego, n.position);
  n.distance = norm(n.ego_center);
  return n;
}

}  // namespace

std::string_view to_string(SpatialEdge e) { return kEdgeNames[static_cast<std::size_t>(e)]; }
std::string_view edge_phrase(SpatialEdge e) { return kEdgePhrases[static_cast<std::size_t>(e)]; }
std::string_view to_string(Sector s) { return kSectorNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Extreme e) { return kExtremeNames[static_cast<std::size_t>(e)]; }

std::optional<Sector> parse_sector(std::string_view s) {
  for (std::size_t i = 0; i < kSectorNames.size(); ++i) {
    if (kSectorNames[i] == s) return static_cast<Sector>(i);
  }
  return std::nullopt;
}

SpatialEdge mirror(SpatialEdge e) {
  switch (e) {
    case SpatialEdge::kL: return SpatialEdge::kR;
    case SpatialEdge::kR: return SpatialEdge::kL;
    case SpatialEdge::kLb: return SpatialEdge::kRf;
    case SpatialEdge::kRf: return SpatialEdge::kLb;
    case SpatialEdge::kLf: return SpatialEdge::kRb;
    case SpatialEdge::kRb: return SpatialEdge::kLf;
    case SpatialEdge::kB: return SpatialEdge::kF;
    case SpatialEdge::kF: return SpatialEdge::kB;
  }
  return e;
}

Sector sector_of(const Vec2& v) {
  if (v.x == 0.0 && v.y == 0.0) return Sector::kFront;
  // Clockwise angle from straight ahead, in [0, 360).
  double cw = -rad_to_deg(std::atan2(v.y, v.x));
  if (cw < 0.0) cw += 360.0;
  const int idx = static_cast<int>(std::floor((cw + 22.5) / 45.0)) % kSectorCount;
  return static_cast<Sector>(idx);
}

double sector_separation_deg(Sector a, Sector b) {
  const int d = std::abs(static_cast<int>(a) - static_cast<int>(b)) % kSectorCount;
  return 45.0 * std::min(d, kSectorCount - d);
}

std::size_t SpatialVocab::distance_bucket(double meters) const {
  std::size_t i = 0;
  while (i < distance_bounds.size() && meters >= distance_bounds[i]) ++i;
  return i;
}

const std::string& SpatialVocab::distance_word(double meters) const {
  return distance_words[distance_bucket(meters)];
}

void SpatialVocab::validate() const {
  if (distance_words.size() != distance_bounds.size() + 1 || distance_words.empty()) {
    throw InvariantError("distance vocabulary needs one more word than bounds");
  }
  for (std::size_t i = 0; i < distance_bounds.size(); ++i) {
    if (!(distance_bounds[i] > 0.0) || (i > 0 && distance_bounds[i] <= distance_bounds[i - 1])) {
      throw InvariantError("distance bounds must be positive and increasing");
    }
  }
  if (!(same_heading_deg > 0.0 && same_heading_deg < 180.0)) {
    throw InvariantError("same_heading_deg must lie in (0, 180)");
  }
}

const SceneNode& SceneGraph::node(int label) const {
  if (label == kEgoLabel) return ego;
  auto it = nodes.find(label);
  if (it == nodes.end()) throw UnknownLabel("unknown label <" + std::to_string(label) + ">");
  return it->second;
}

std::vector<int> SceneGraph::labels() const {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (const auto& [label, n] : nodes) out.push_back(label);
  return out;
}

std::optional<SpatialEdge> SceneGraph::edge(int a, int b) const {
  if (a == kEgoLabel) {
    auto it = ego_edges.find(b);
    if (it == ego_edges.end()) return std::nullopt;
    return it->second;
  }
  auto it = edges.find({a, b});
  if (it == edges.end()) return std::nullopt;
  return it->second;
}

Sidedness sidedness(const Corners& a, const Corners& b, const Vec2& v) {
  return separation(a, b, rot90ccw(v));
}

Sidedness front_back(const Corners& a, const Corners& b, const Vec2& heading) {
  return separation(a, b, heading);
}

std::optional<SpatialEdge> spatial_edge(const Corners& a, const Corners& b, const Vec2& ego_heading) {
  const Sidedness lr = sidedness(a, b, ego_heading);
  const Sidedness fb = front_back(a, b, ego_heading);
  switch (lr) {
    case Sidedness::kLeft:
      if (fb == kFront) return SpatialEdge::kLf;
      if (fb == kBack) return SpatialEdge::kLb;
      return SpatialEdge::kL;
    case Sidedness::kRight:
      if (fb == kFront) return SpatialEdge::kRf;
      if (fb == kBack) return SpatialEdge::kRb;
      return SpatialEdge::kR;
    case Sidedness::kNone:
      if (fb == kFront) return SpatialEdge::kF;
      if (fb == kBack) return SpatialEdge::kB;
      return std::nullopt;
  }
  return std::nullopt;
}

SceneGraph build_scene_graph(const FrameSnapshot& frame, const VisibilityPolicy& policy,
                             const LabelAssignment& labels) {
  SceneGraph g;
  g.scenario_id = frame.scenario_id;
  g.step = frame.step;
  const Pose2D& ego_pose = frame.ego.state.pose;
  g.ego = make_node(frame.ego, kEgoLabel, ego_pose);

  for (const auto& [label, track_id] : labels.track_of) {
    for (const auto& obj : frame.others) {
      if (obj.track_id != track_id) continue;
      SceneNode n = make_node(obj, label, ego_pose);
      if (n.distance <= policy.max_range_m) g.nodes.emplace(label, std::move(n));
      break;
    }
  }

  const Vec2 ref = ego_pose.heading;
  for (const auto& [la, a] : g.nodes) {
    if (auto e = spatial_edge(g.ego.corners, a.corners, ref)) g.ego_edges.emplace(la, *e);
    for (const auto& [lb, b] : g.nodes) {
      if (la == lb) continue;
      if (auto e = spatial_edge(a.corners, b.corners, ref)) g.edges.emplace(std::make_pair(la, lb), *e);
    }
  }
  return g;
}

int extreme_label(const SceneGraph& g, Extreme e) {
  if (g.nodes.empty()) throw UnknownLabel("empty scene graph");
  return order_by(g, e, g.labels()).front();
}

std::vector<int> order_by(const SceneGraph& g, Extreme e, std::vector<int> labels) {
  for (int l : labels) g.node(l);
  std::stable_sort(labels.begin(), labels.end(), [&](int a, int b) {
    const double ka = sort_key(g.node(a), e);
    const double kb = sort_key(g.node(b), e);
    return ka != kb ? ka < kb : a < b;
  });
  return labels;
}

Sector position_sector(const SceneGraph& g, int label) { return sector_of(g.node(label).ego_center); }

Sector heading_sector(const SceneGraph& g, int label) {
  const Vec2 h = g.node(label).heading;
  const Vec2 eh = g.ego.heading;
  return sector_of({dot(h, eh), dot(h, rot90ccw(eh))});
}

std::vector<int> labels_in_sector(const SceneGraph& g, Sector s) {
  std::vector<int> out;
  for (const auto& [label, n] : g.nodes) {
    if (sector_of(n.ego_center) == s) out.push_back(label);
  }
  return out;
}

std::vector<int> labels_in_distance_bucket(const SceneGraph& g, std::size_t bucket,
                                           const SpatialVocab& vocab) {
  std::vector<int> out;
  for (const auto& [label, n] : g.nodes) {
    if (vocab.distance_bucket(n.distance) == bucket) out.push_back(label);
  }
  return out;
}

double relative_distance(const SceneGraph& g, int a, int b) {
  return distance(g.node(a).position, g.node(b).position);
}

std::optional<SpatialEdge> relative_position(const SceneGraph& g, int a, int b) {
  g.node(a);
  g.node(b);
  return g.edge(a, b);
}

bool same_heading(const SceneGraph& g, int a, int b, const SpatialVocab& vocab) {
  const Vec2 ha = g.node(a).heading;
  const Vec2 hb = g.node(b).heading;
  const double angle = std::abs(rad_to_deg(std::atan2(cross(ha, hb), dot(ha, hb))));
  return angle <= vocab.same_heading_deg;
}

std::string SceneGraph::to_json() const {
  using J = nlohmann::ordered_json;
  auto node_json = [](const SceneNode& n) {
    J j;
    j["label"] = n.label;
    j["track_id"] = n.track_id;
    j["kind"] = std::string(to_string(n.kind));
    j["color"] = n.color ? J(std::string(to_string(*n.color))) : J(nullptr);
    j["height"] = n.height;
    J corners = J::array();
    for (const auto& c : n.corners) corners.push_back({c.x, c.y});
    j["corners"] = std::move(corners);
    j["heading"] = {n.heading.x, n.heading.y};
    j["speed"] = n.speed;
    j["ego_center"] = {n.ego_center.x, n.ego_center.y};
    j["distance"] = n.distance;
    return j;
  };
  J root;
  root["scenario"] = scenario_id;
  root["step"] = step;
  root["ego"] = node_json(ego);
  J nodes_j = J::array();
  for (const auto& [label, n] : nodes) nodes_j.push_back(node_json(n));
  root["nodes"] = std::move(nodes_j);
  J edges_j = J::array();
  for (const auto& [b, e] : ego_edges) edges_j.push_back({{"from", "ego"}, {"to", b}, {"edge", to_string(e)}});
  for (const auto& [key, e] : edges) {
    edges_j.push_back({{"from", key.first}, {"to", key.second}, {"edge", to_string(e)}});
  }
  root["edges"] = std::move(edges_j);
  return root.dump(2);
}

}  // namespace scenevqa
