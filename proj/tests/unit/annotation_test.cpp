#include <algorithm>
#include <set>

#include "doctest.h"
#include "scenevqa/annotation.hpp"
#include "scenevqa/raster.hpp"
#include "scenevqa/synth.hpp"
#include "support.hpp"

using namespace scenevqa;

namespace {

BBox2D rect_box(double x0, double y0, double x1, double y1, std::string id, double depth = 0.0) {
  BBox2D b;
  b.rect = {{x0, y0}, {x1, y1}};
  b.track_id = std::move(id);
  b.depth = depth;
  return b;
}

std::set<std::string> ids(const std::vector<BBox2D>& boxes) {
  std::set<std::string> out;
  for (const auto& b : boxes) out.insert(b.track_id);
  return out;
}

// Visible pixels per box, counted by scanning every pixel and asking which
// box is nearest among those covering it.
long visible_pixels(const std::vector<BBox2D>& boxes, std::size_t target, int w, int h) {
  long n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& r = boxes[i].rect;
        if (cx >= r.min.x && cx < r.max.x && cy >= r.min.y && cy < r.max.y) {
          if (i == target) ++n;
          break;
        }
      }
    }
  }
  return n;
}

FrameSnapshot frame_with(std::vector<FrameObject> others) {
  FrameSnapshot f;
  f.scenario_id = "ann";
  f.ego = {"ego", ObjectKind::kSedan, std::nullopt, 1.5, fixture::state_at(0, 0)};
  f.others = std::move(others);
  return f;
}

}  // namespace

TEST_CASE("projection geometry") {
  const CameraRig cam;
  const Pose2D ego{{0, 0}, {1, 0}};
  const auto ahead = project_box(cam, ego, fixture::state_at(10, 0), 1.5);
  REQUIRE(ahead);
  CHECK(std::abs(ahead->rect.center().x - cam.width / 2.0) <= 1.0);
  CHECK_FALSE(project_box(cam, ego, fixture::state_at(-10, 0), 1.5).has_value());

  const auto near = project_box(cam, ego, fixture::state_at(10, 3), 1.5);
  const auto far = project_box(cam, ego, fixture::state_at(20, 3), 1.5);
  REQUIRE(near);
  REQUIRE(far);
  CHECK(near->rect.max.x - near->rect.min.x > far->rect.max.x - far->rect.min.x);
  CHECK(near->rect.max.y - near->rect.min.y > far->rect.max.y - far->rect.min.y);
  CHECK(near->depth < far->depth);
}

TEST_CASE("pixel rectangles count covered pixel centres") {
  CHECK(PixelRect{{0, 0}, {40, 30}}.pixel_count() == 1200);
  CHECK(PixelRect{{0.4, 0}, {40.4, 30}}.pixel_count() == 1200);
  CHECK(PixelRect{{0.6, 0}, {40.4, 30}}.pixel_count() == 1170);
  CHECK(PixelRect{{5, 5}, {5, 9}}.empty());
}

TEST_CASE("occlusion thresholds") {
  const VisibilityPolicy p;  // 0.5 and 1200 px
  const int w = 400, h = 200;

  SUBCASE("fully covered box is removed") {
    const std::vector<BBox2D> boxes = {rect_box(0, 0, 100, 50, "near"), rect_box(10, 10, 60, 40, "far")};
    CHECK(ids(occlusion_filter(boxes, p, w, h)) == std::set<std::string>{"near"});
  }
  SUBCASE("separate boxes all survive") {
    const std::vector<BBox2D> boxes = {rect_box(0, 0, 40, 30, "a"), rect_box(100, 0, 150, 40, "b"),
                                       rect_box(200, 100, 300, 200, "c")};
    CHECK(occlusion_filter(boxes, p, w, h).size() == 3);
  }
  SUBCASE("60 percent cover removes a 4000 px box with 1600 px left") {
    const std::vector<BBox2D> boxes = {rect_box(0, 0, 60, 40, "near"), rect_box(0, 0, 100, 40, "far")};
    CHECK(visible_pixels(boxes, 1, w, h) == 1600);
    CHECK(ids(occlusion_filter(boxes, p, w, h)) == std::set<std::string>{"near"});
  }
  SUBCASE("exactly half visible survives") {
    const std::vector<BBox2D> boxes = {rect_box(0, 0, 50, 40, "near"), rect_box(0, 0, 100, 40, "far")};
    CHECK(visible_pixels(boxes, 1, w, h) == 2000);
    CHECK(ids(occlusion_filter(boxes, p, w, h)) == std::set<std::string>{"near", "far"});
  }
  SUBCASE("1200 px is enough, 1199 px is not") {
    const std::vector<BBox2D> boxes = {rect_box(0, 0, 40, 30, "exact"), rect_box(100, 0, 111, 109, "short")};
    CHECK(visible_pixels(boxes, 0, w, h) == 1200);
    CHECK(visible_pixels(boxes, 1, w, h) == 1199);
    CHECK(ids(occlusion_filter(boxes, p, w, h)) == std::set<std::string>{"exact"});
  }
  SUBCASE("pixel rule binds when the fraction passes") {
    // 60 x 40 = 2400 px, half covered: 1200 px at fraction 0.5 survives;
    // one more covered column drops below both thresholds.
    const std::vector<BBox2D> ok = {rect_box(0, 0, 30, 40, "near"), rect_box(0, 0, 60, 40, "far")};
    CHECK(occlusion_filter(ok, p, w, h).size() == 2);
    VisibilityPolicy loose = p;
    loose.min_visible_fraction = 0.4;
    const std::vector<BBox2D> thin = {rect_box(0, 0, 31, 40, "near"), rect_box(0, 0, 60, 40, "far")};
    CHECK(visible_pixels(thin, 1, w, h) == 1160);
    CHECK(ids(occlusion_filter(thin, loose, w, h)) == std::set<std::string>{"near"});
  }
  SUBCASE("removing a nearer box never hides a farther one") {
    const std::vector<BBox2D> boxes = {rect_box(0, 0, 80, 60, "a"), rect_box(50, 0, 150, 60, "b"),
                                       rect_box(120, 0, 220, 80, "c")};
    const auto all = ids(occlusion_filter(boxes, p, w, h));
    const auto fewer = ids(occlusion_filter({boxes[1], boxes[2]}, p, w, h));
    for (const auto& id : all) {
      if (id != "a") CHECK(fewer.count(id) == 1);
    }
  }
}

TEST_CASE("labels are a bijection onto 0..n-1 and ignore input order") {
  std::vector<BBox2D> boxes;
  for (int i = 0; i < 7; ++i) boxes.push_back(rect_box(i * 50, 0, i * 50 + 40, 40, "trk" + std::to_string(i)));
  const auto a = assign_labels(boxes, "salt");
  std::reverse(boxes.begin(), boxes.end());
  const auto b = assign_labels(boxes, "salt");
  std::set<int> labels;
  for (std::size_t i = 0; i < a.size(); ++i) {
    labels.insert(a[i].label);
    CHECK(a[i].label == static_cast<int>(i));
    CHECK(a[i].track_id == b[i].track_id);
  }
  CHECK(labels.size() == 7);
  CHECK(*labels.rbegin() == 6);
}

TEST_CASE("label placement") {
  SUBCASE("single large box anchors at its centre") {
    auto b = rect_box(100, 100, 300, 220, "t");
    b.label = 0;
    const auto la = place_labels({b}, 800, 600);
    CHECK(distance(la.anchor.at(0), {200, 160}) <= 1.0);
  }
  SUBCASE("30 x 30 box gets its label outside") {
    auto b = rect_box(100, 100, 130, 130, "t");
    b.label = 0;
    const auto la = place_labels({b}, 800, 600);
    const Vec2 a = la.anchor.at(0);
    CHECK_FALSE((a.x >= 100 && a.x < 130 && a.y >= 100 && a.y < 130));
    CHECK(la.extent.at(0).max.y <= 100.0);
  }
  SUBCASE("box at the top edge puts its label below") {
    auto b = rect_box(100, 0, 130, 30, "t");
    b.label = 0;
    const auto la = place_labels({b}, 800, 600);
    CHECK(la.extent.at(0).min.y >= 30.0);
  }
  SUBCASE("exactly 1600 px stays inside") {
    auto b = rect_box(100, 100, 140, 140, "t");
    b.label = 0;
    const Vec2 a = place_labels({b}, 800, 600).anchor.at(0);
    CHECK((a.x >= 100 && a.x < 140 && a.y >= 100 && a.y < 140));
  }
  SUBCASE("disjoint boxes keep anchors apart") {
    auto b0 = rect_box(100, 100, 200, 180, "a");
    auto b1 = rect_box(220, 100, 320, 180, "b");
    b0.label = 0;
    b1.label = 1;
    const auto la = place_labels({b0, b1}, 800, 600);
    CHECK(distance(la.anchor.at(0), la.anchor.at(1)) >= 40.0);
  }
  SUBCASE("anchors stay in the image") {
    auto b = rect_box(0, 0, 10, 10, "corner");
    b.label = 12;
    const auto la = place_labels({b}, 100, 100);
    const auto& e = la.extent.at(12);
    CHECK(e.min.x >= 0);
    CHECK(e.min.y >= 0);
    CHECK(e.max.x <= 100);
    CHECK(e.max.y <= 100);
  }
}

TEST_CASE("annotated frames follow the mark style") {
  const CameraRig cam = CameraRig::closed_loop();
  for (const auto& s : synth_suite()) {
    for (int step : {0, 40}) {
      const auto f = frame_at(s, step);
      const auto annot = annotate_frame(f, cam, VisibilityPolicy{});
      const auto plan = build_plan(f, s.drivable, cam, annot);
      CHECK(annot.labels.size() == annot.visible.size());
      std::size_t strokes = 0, texts = 0;
      for (const auto& c : plan.commands) {
        if (const auto* r = std::get_if<StrokeRect>(&c)) {
          ++strokes;
          CHECK(r->width == 2);
        }
        if (const auto* t = std::get_if<LabelText>(&c)) {
          ++texts;
          CHECK(t->scale == 1.0);
          CHECK(t->bg == Rgb{0, 0, 0});
          CHECK(t->anchor.x >= 0);
          CHECK(t->anchor.x <= cam.width);
          CHECK(t->anchor.y >= 0);
          CHECK(t->anchor.y <= cam.height);
        }
        CHECK_FALSE(std::holds_alternative<HighlightRect>(c));
      }
      CHECK(strokes == annot.visible.size());
      CHECK(texts == annot.visible.size());
      for (const auto& b : annot.visible) {
        if (b.rect.pixel_count() < kSmallBoxPixels) {
          const Vec2 a = annot.labels.anchor.at(b.label);
          CHECK_FALSE((a.x >= b.rect.min.x && a.x < b.rect.max.x && a.y >= b.rect.min.y && a.y < b.rect.max.y));
        }
      }
    }
  }
}

TEST_CASE("rendering is deterministic and grounding adds one highlight") {
  const CameraRig cam{60.0, 320, 180, 1.6, 2.3};
  const auto s = synth_scenario("straight_road", 0);
  const auto f = frame_at(s, 0);
  const auto annot = annotate_frame(f, cam, VisibilityPolicy{0.5, 50, 75.0});
  REQUIRE_FALSE(annot.visible.empty());
  const auto r1 = render_frame(f, s.drivable, cam, annot);
  const auto r2 = render_frame(f, s.drivable, cam, annot);
  CHECK(r1.png == r2.png);
  CHECK(r1.plan.to_json() == r2.plan.to_json());
  REQUIRE(r1.png.size() > 8);
  CHECK(r1.png[1] == 'P');

  const auto g = render_frame(f, s.drivable, cam, annot, RenderOptions{annot.visible.front().label});
  CHECK(std::count_if(g.plan.commands.begin(), g.plan.commands.end(),
                      [](const DrawCommand& c) { return std::holds_alternative<HighlightRect>(c); }) == 1);

  const auto empty = frame_with({});
  const auto none = annotate_frame(empty, cam, VisibilityPolicy{});
  const auto r = render_frame(empty, s.drivable, cam, none);
  CHECK(none.visible.empty());
  for (const auto& c : r.plan.commands) CHECK(std::holds_alternative<FillPolygon>(c));
}

TEST_CASE("raster primitives") {
  Image img(20, 10);
  img.fill_rect({{2, 2}, {6, 5}}, kWhite);
  CHECK(img.at(2, 2) == kWhite);
  CHECK(img.at(5, 4) == kWhite);
  CHECK(img.at(6, 4) == kBlack);
  img.stroke_rect({{8, 1}, {18, 9}}, 2, Rgb{255, 0, 0});
  CHECK(img.at(8, 5) == Rgb{255, 0, 0});
  CHECK(img.at(13, 5) == kBlack);
  CHECK(encode_png(img) == encode_png(img));
}
