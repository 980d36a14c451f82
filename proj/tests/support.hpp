#pragma once

// Test-only oracles and fixtures. Nothing here calls into the library code it
// is used to check; corners and projections are recomputed from scratch.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scenevqa/geometry.hpp"
#include "scenevqa/scenario.hpp"

namespace oracle {

using scenevqa::Vec2;

struct Box {
  double cx, cy, yaw, len, wid;
};

inline std::array<Vec2, 4> corners(const Box& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  std::array<Vec2, 4> out{};
  const double hl = b.len / 2, hw = b.wid / 2;
  const double sx[4] = {hl, -hl, -hl, hl};
  const double sy[4] = {hw, hw, -hw, -hw};
  for (int i = 0; i < 4; ++i) out[i] = {b.cx + c * sx[i] - s * sy[i], b.cy + s * sx[i] + c * sy[i]};
  return out;
}

inline scenevqa::OrientedBox to_obb(const Box& b) {
  return {{b.cx, b.cy}, {std::cos(b.yaw), std::sin(b.yaw)}, {b.len / 2, b.wid / 2}};
}

// Signed gap along `axis` between B's nearest vertex and A's furthest one.
// Positive: B lies strictly beyond A. Also returns the mirrored gap.
struct Gap {
  double beyond;  // min_B - max_A
  double before;  // min_A - max_B
};

inline Gap projection_gap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 axis) {
  double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
  for (const auto& p : a) {
    const double d = p.x * axis.x + p.y * axis.y;
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  for (const auto& p : b) {
    const double d = p.x * axis.x + p.y * axis.y;
    bmin = std::min(bmin, d);
    bmax = std::max(bmax, d);
  }
  return {bmin - amax, amin - bmax};
}

// 'L', 'R' or 'N' for left/right of A w.r.t. reference direction v.
inline char side(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 v) {
  const Vec2 left{-v.y, v.x};
  const Gap g = projection_gap(a, b, left);
  if (g.beyond > 0) return 'L';
  if (g.before > 0) return 'R';
  return 'N';
}

inline char fore_aft(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 h) {
  const Gap g = projection_gap(a, b, h);
  if (g.beyond > 0) return 'F';
  if (g.before > 0) return 'B';
  return 'N';
}

// Smallest distance of any gap from zero; tiny margins are boundary cases.
inline double margin(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 h) {
  const Gap g1 = projection_gap(a, b, h);
  const Gap g2 = projection_gap(a, b, {-h.y, h.x});
  return std::min({std::abs(g1.beyond), std::abs(g1.before), std::abs(g2.beyond), std::abs(g2.before)});
}

// Edge name in the library's vocabulary, or "" for no edge.
inline std::string edge_name(char s, char f) {
  std::string out;
  if (s == 'L') out = "l";
  if (s == 'R') out = "r";
  if (f == 'F') out += "f";
  if (f == 'B') out += "b";
  return out;
}

// Sutherland-Hodgman clip of a convex polygon against a convex CCW clipper.
inline std::vector<Vec2> clip(std::vector<Vec2> subject, const std::vector<Vec2>& clipper) {
  for (std::size_t i = 0; i < clipper.size() && !subject.empty(); ++i) {
    const Vec2 a = clipper[i], b = clipper[(i + 1) % clipper.size()];
    auto inside = [&](const Vec2& p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0; };
    auto cut = [&](const Vec2& p, const Vec2& q) {
      const double d1 = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      const double d2 = (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
      const double t = d1 / (d1 - d2);
      return Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
    };
    std::vector<Vec2> out;
    for (std::size_t k = 0; k < subject.size(); ++k) {
      const Vec2 p = subject[k], q = subject[(k + 1) % subject.size()];
      const bool pin = inside(p), qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) out.push_back(cut(p, q));
    }
    subject = std::move(out);
  }
  return subject;
}

inline double area(const std::vector<Vec2>& poly) {
  double s = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return std::abs(s) / 2;
}

inline double overlap_area(const Box& a, const Box& b) {
  const auto ca = corners(a), cb = corners(b);
  return area(clip({ca.begin(), ca.end()}, {cb.begin(), cb.end()}));
}

inline Box random_box(std::mt19937_64& g, double spread = 8.0) {
  std::uniform_real_distribution<double> pos(-spread, spread), yaw(-3.14159, 3.14159), len(0.5, 5.0),
      wid(0.5, 2.5);
  return {pos(g), pos(g), yaw(g), len(g), wid(g)};
}

}  // namespace oracle

namespace fixture {

using namespace scenevqa;

inline ObjectState state_at(double x, double y, double yaw = 0.0, double speed = 0.0, double len = 4.5,
                            double wid = 2.0) {
  ObjectState st;
  st.pose.position = {x, y};
  st.pose.heading = {std::cos(yaw), std::sin(yaw)};
  st.speed = speed;
  st.half_extents = {len / 2, wid / 2};
  return st;
}

inline Track still_track(std::string id, int horizon, ObjectState st, ObjectKind kind = ObjectKind::kSedan,
                         std::optional<ObjectColor> color = std::nullopt) {
  Track t;
  t.id = std::move(id);
  t.kind = kind;
  t.color = color;
  t.states.assign(static_cast<std::size_t>(horizon), st);
  return t;
}

// A wide open square of road with the ego parked at the origin facing +x.
inline ScenarioRecord open_lot(int horizon = 40) {
  ScenarioRecord s;
  s.id = "lot";
  s.horizon = horizon;
  s.ego_id = "ego";
  s.tracks.push_back(still_track("ego", horizon, state_at(0, 0)));
  s.drivable.push_back({{-200, -200}, {200, -200}, {200, 200}, {-200, 200}});
  s.destination = {50, 0};
  return s;
}

}  // namespace fixture
