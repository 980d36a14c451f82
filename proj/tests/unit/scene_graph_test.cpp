#include <algorithm>
#include <random>

#include "doctest.h"
#include "scenevqa/scene_graph.hpp"
#include "support.hpp"

using namespace scenevqa;

namespace {

Corners box_xy(double x0, double x1, double y0, double y1) {
  return OrientedBox{{(x0 + x1) / 2, (y0 + y1) / 2}, {1, 0}, {(x1 - x0) / 2, (y1 - y0) / 2}}.corners();
}

Corners to_corners(const std::array<Vec2, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

struct Obj {
  double x, y, yaw = 0.0;
};

// Ego at the origin facing +x; labels 0..n-1 in input order.
SceneGraph graph_of(const std::vector<Obj>& objs, double max_range = 75.0) {
  FrameSnapshot f;
  f.scenario_id = "g";
  f.ego = {"ego", ObjectKind::kSedan, std::nullopt, 1.5, fixture::state_at(0, 0)};
  LabelAssignment labels;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string id = "t" + std::to_string(i);
    f.others.push_back({id, ObjectKind::kSedan, std::nullopt, 1.5,
                        fixture::state_at(objs[i].x, objs[i].y, objs[i].yaw, 0, 1.0, 1.0)});
    labels.track_of[static_cast<int>(i)] = id;
  }
  VisibilityPolicy p;
  p.max_range_m = max_range;
  return build_scene_graph(f, p, labels);
}

}  // namespace

TEST_CASE("sidedness examples") {
  const Corners a = box_xy(-1, 1, -1, 1);
  CHECK(sidedness(a, box_xy(-1, 1, 2, 3), {1, 0}) == Sidedness::kLeft);
  CHECK(sidedness(a, box_xy(-1, 1, 0.5, 1.5), {1, 0}) == Sidedness::kNone);
  CHECK(front_back(a, box_xy(2, 3, -1, 1), {1, 0}) == kFront);
  CHECK(front_back(a, box_xy(-3, -2, -1, 1), {1, 0}) == kBack);
  CHECK(front_back(a, box_xy(0, 2, -1, 1), {1, 0}) == Sidedness::kNone);
  CHECK(spatial_edge(a, box_xy(2, 3, 2, 3), {1, 0}) == SpatialEdge::kLf);
  CHECK_FALSE(spatial_edge(a, box_xy(0, 2, 0, 2), {1, 0}).has_value());
  // Touching is not strictly beyond.
  CHECK(sidedness(a, box_xy(-1, 1, 1, 2), {1, 0}) == Sidedness::kNone);
  CHECK_THROWS_AS(sidedness(a, box_xy(0, 0, 0, 1), {1, 0}), DegenerateBox);
}

TEST_CASE("sidedness flips with the reference direction") {
  std::mt19937_64 g(5);
  for (int i = 0; i < 1000; ++i) {
    const auto a = to_corners(oracle::corners(oracle::random_box(g)));
    const auto b = to_corners(oracle::corners(oracle::random_box(g)));
    const double t = std::uniform_real_distribution<double>(-3.2, 3.2)(g);
    const Vec2 v{std::cos(t), std::sin(t)};
    const auto fwd = sidedness(a, b, v);
    const auto rev = sidedness(a, b, -v);
    CHECK((fwd == Sidedness::kLeft) == (rev == Sidedness::kRight));
    CHECK((fwd == Sidedness::kNone) == (rev == Sidedness::kNone));
  }
}

TEST_CASE("composition table covers all nine cases") {
  const Corners a = box_xy(-1, 1, -1, 1);
  // Columns: x range choosing front_back; rows: y range choosing sidedness.
  const std::pair<double, double> xs[] = {{2, 3}, {-0.5, 0.5}, {-3, -2}};
  const std::pair<double, double> ys[] = {{2, 3}, {-0.5, 0.5}, {-3, -2}};
  const char* expected[3][3] = {{"lf", "l", "lb"}, {"f", "", "b"}, {"rf", "r", "rb"}};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const auto e = spatial_edge(a, box_xy(xs[c].first, xs[c].second, ys[r].first, ys[r].second), {1, 0});
      CHECK(std::string(e ? to_string(*e) : "") == expected[r][c]);
    }
  }
}

TEST_CASE("edges are antisymmetric, translation invariant and rotation equivariant") {
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> ang(-3.2, 3.2), off(-100, 100);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto ba = oracle::random_box(g), bb = oracle::random_box(g);
    const double t = ang(g);
    const Vec2 h{std::cos(t), std::sin(t)};
    const auto ca = oracle::corners(ba), cb = oracle::corners(bb);
    if (oracle::margin(ca, cb, h) < 1e-6) continue;
    ++checked;
    const auto ab = spatial_edge(to_corners(ca), to_corners(cb), h);
    const auto ba_edge = spatial_edge(to_corners(cb), to_corners(ca), h);
    CHECK(ab.has_value() == ba_edge.has_value());
    if (ab) CHECK(*ba_edge == mirror(*ab));

    const Vec2 d{off(g), off(g)};
    auto moved = [&](oracle::Box b) { b.cx += d.x; b.cy += d.y; return to_corners(oracle::corners(b)); };
    CHECK(spatial_edge(moved(ba), moved(bb), h) == ab);

    const double r = ang(g);
    auto turned = [&](oracle::Box b) {
      const Vec2 c = rotate({b.cx, b.cy}, r);
      return to_corners(oracle::corners({c.x, c.y, b.yaw + r, b.len, b.wid}));
    };
    const Vec2 hr = rotate(h, r);
    if (oracle::margin(oracle::corners({rotate({ba.cx, ba.cy}, r).x, rotate({ba.cx, ba.cy}, r).y, ba.yaw + r,
                                        ba.len, ba.wid}),
                       oracle::corners({rotate({bb.cx, bb.cy}, r).x, rotate({bb.cx, bb.cy}, r).y, bb.yaw + r,
                                        bb.len, bb.wid}),
                       hr) > 1e-6) {
      CHECK(spatial_edge(turned(ba), turned(bb), hr) == ab);
    }
  }
  CHECK(checked > 2500);
}

TEST_CASE("scene graph construction") {
  const auto empty = graph_of({});
  CHECK(empty.nodes.empty());
  CHECK(empty.edges.empty());
  CHECK(empty.ego_edges.empty());
  CHECK_THROWS_AS(extreme_label(empty, Extreme::kClosest), UnknownLabel);

  // Well separated so every ordered pair carries an edge.
  const auto g3 = graph_of({{10, 0}, {20, 10}, {30, -10}});
  CHECK(g3.nodes.size() == 3);
  CHECK(g3.edges.size() == 6);
  CHECK(g3.ego_edges.size() == 3);
  CHECK(g3.edge(kEgoLabel, 0) == SpatialEdge::kF);
  CHECK(g3.edge(0, 1) == SpatialEdge::kLf);
  CHECK(g3.edge(1, 0) == SpatialEdge::kRb);
  CHECK_THROWS_AS(g3.node(7), UnknownLabel);

  const auto far = graph_of({{80, 0}, {10, 0}});
  CHECK(far.nodes.size() == 1);
  CHECK(far.nodes.count(1) == 1);
}

TEST_CASE("query examples") {
  const auto g = graph_of({{5, 0}, {10, 0}, {2, 0}});
  CHECK(extreme_label(g, Extreme::kClosest) == 2);
  const auto h = graph_of({{10, -1}, {10, 4}, {10, 0}});
  CHECK(extreme_label(h, Extreme::kLeftmost) == 1);
  CHECK(extreme_label(h, Extreme::kRightmost) == 0);
  CHECK(position_sector(graph_of({{0, 10}}), 0) == Sector::kLeft);
  CHECK(position_sector(graph_of({{-10, -10}}), 0) == Sector::kRearRight);
  CHECK(heading_sector(graph_of({{10, 0, kPi}}), 0) == Sector::kRear);
  CHECK(sector_of({0, 0}) == Sector::kFront);
  CHECK(sector_of({1, -1}) == Sector::kFrontRight);
  CHECK(sector_of({-1, 0}) == Sector::kRear);
  CHECK(sector_separation_deg(Sector::kFront, Sector::kRear) == 180.0);
  CHECK(sector_separation_deg(Sector::kFrontLeft, Sector::kFrontRight) == 90.0);

  SpatialVocab v;
  CHECK(v.distance_word(0.0) == "very close");
  CHECK(v.distance_word(2.0) == "close");
  CHECK(v.distance_word(9.99) == "close");
  CHECK(v.distance_word(10.0) == "medium");
  CHECK(v.distance_word(30.0) == "far");
  const auto d = graph_of({{1, 0}, {5, 0}, {40, 0}});
  CHECK(labels_in_distance_bucket(d, 0, v) == std::vector<int>{0});
  CHECK(labels_in_distance_bucket(d, 3, v) == std::vector<int>{2});
  CHECK(same_heading(graph_of({{10, 0, 0}, {20, 0, deg_to_rad(29)}}), 0, 1, v));
  CHECK_FALSE(same_heading(graph_of({{10, 0, 0}, {20, 0, deg_to_rad(31)}}), 0, 1, v));
}

TEST_CASE("ordering queries match a sort oracle and survive scaling") {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u(-60, 60);
  const Extreme kinds[] = {Extreme::kClosest, Extreme::kLeftmost, Extreme::kRightmost, Extreme::kFrontmost,
                           Extreme::kBackmost};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Obj> objs(2 + trial % 5);
    for (auto& o : objs) o = {u(g), u(g)};
    const auto graph = graph_of(objs, 1000);
    std::vector<Obj> scaled = objs;
    for (auto& o : scaled) { o.x *= 3.5; o.y *= 3.5; }
    const auto big = graph_of(scaled, 1000);
    for (Extreme e : kinds) {
      std::vector<std::pair<double, int>> keyed;
      for (std::size_t i = 0; i < objs.size(); ++i) {
        const double x = objs[i].x, y = objs[i].y;
        double key = 0;
        if (e == Extreme::kClosest) key = std::hypot(x, y);
        if (e == Extreme::kLeftmost) key = -y;
        if (e == Extreme::kRightmost) key = y;
        if (e == Extreme::kFrontmost) key = -x;
        if (e == Extreme::kBackmost) key = x;
        keyed.push_back({key, static_cast<int>(i)});
      }
      std::sort(keyed.begin(), keyed.end());
      std::vector<int> expect;
      for (const auto& k : keyed) expect.push_back(k.second);
      CHECK(order_by(graph, e, graph.labels()) == expect);
      CHECK(order_by(big, e, big.labels()) == expect);
      CHECK(extreme_label(graph, e) == expect.front());
    }
  }
}
