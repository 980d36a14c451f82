#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace scenevqa {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline Vec2 rot90ccw(const Vec2& a) { return {-a.y, a.x}; }

inline Vec2 rotate(const Vec2& a, double angle_rad) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}

inline Vec2 normalized(const Vec2& a) {
  const double n = norm(a);
  return n > 0.0 ? Vec2{a.x / n, a.y / n} : Vec2{1.0, 0.0};
}

constexpr double kPi = 3.14159265358979323846;
inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

class DegenerateBox : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Polygon = std::vector<Vec2>;
using Corners = std::array<Vec2, 4>;

/// Rectangle with arbitrary orientation. `heading` is the unit length axis,
/// `half_extents` is (length/2, width/2).
struct OrientedBox {
  Vec2 center;
  Vec2 heading{1.0, 0.0};
  Vec2 half_extents{0.5, 0.5};

  /// Counter-clockwise: front-left, rear-left, rear-right, front-right.
  Corners corners() const;
};

double signed_area(const Polygon& poly);
double signed_area(const Corners& c);

/// Even-odd rule. Points exactly on an edge may fall either way.
bool point_in_polygon(const Vec2& p, const Polygon& poly);

/// Closed-segment intersection, collinear overlap included.
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// At least three vertices, non-zero area, no two non-adjacent edges touching.
bool is_simple_polygon(const Polygon& poly);

/// Total length of a polyline.
double arc_length(const std::vector<Vec2>& pts);

}  // namespace scenevqa
