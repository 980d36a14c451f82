#include "scenevqa/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "scenevqa/raster.hpp"
#include "scenevqa/rng.hpp"

namespace scenevqa {

int PixelRect::x0() const { return static_cast<int>(std::ceil(min.x - 0.5)); }
int PixelRect::y0() const { return static_cast<int>(std::ceil(min.y - 0.5)); }
int PixelRect::x1() const { return static_cast<int>(std::ceil(max.x - 0.5)); }
int PixelRect::y1() const { return static_cast<int>(std::ceil(max.y - 0.5)); }

long PixelRect::pixel_count() const {
  const long w = std::max(0, x1() - x0());
  const long h = std::max(0, y1() - y0());
  return w * h;
}

std::optional<int> LabelAssignment::label_of(const std::string& track_id) const {
  for (const auto& [label, id] : track_of) {
    if (id == track_id) return label;
  }
  return std::nullopt;
}

namespace {

constexpr double kNearPlane = 0.1;

// Camera-space point: depth along the optical axis, lateral (left +), up.
struct CamPoint {
  double depth;
  double lateral;
  double up;
};

CamPoint to_camera(const CameraRig& cam, const Pose2D& ego, const Vec2& world, double z) {
  const Vec2 local = to_ego_frame(ego, world);
  return {local.x - cam.forward_offset, local.y, z - cam.mount_height};
}

double focal_px(const CameraRig& cam) {
  return (cam.width / 2.0) / std::tan(deg_to_rad(cam.fov_deg) / 2.0);
}

Vec2 to_pixel(const CameraRig& cam, const CamPoint& p) {
  const double f = focal_px(cam);
  return {cam.width / 2.0 - f * p.lateral / p.depth, cam.height / 2.0 - f * p.up / p.depth};
}

CamPoint lerp(const CamPoint& a, const CamPoint& b, double t) {
  return {a.depth + (b.depth - a.depth) * t, a.lateral + (b.lateral - a.lateral) * t,
          a.up + (b.up - a.up) * t};
}

// Sutherland-Hodgman against depth >= near.
std::vector<CamPoint> clip_near(const std::vector<CamPoint>& poly) {
  std::vector<CamPoint> out;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const CamPoint& a = poly[i];
    const CamPoint& b = poly[(i + 1) % n];
    const bool a_in = a.depth >= kNearPlane;
    const bool b_in = b.depth >= kNearPlane;
    if (a_in) out.push_back(a);
    if (a_in != b_in) out.push_back(lerp(a, b, (kNearPlane - a.depth) / (b.depth - a.depth)));
  }
  return out;
}

Rgb kind_color(ObjectKind k) {
  switch (k) {
    case ObjectKind::kSedan: return {70, 110, 170};
    case ObjectKind::kSuv: return {60, 140, 120};
    case ObjectKind::kPickup: return {150, 110, 70};
    case ObjectKind::kTruck: return {120, 80, 140};
    case ObjectKind::kBus: return {200, 160, 40};
    case ObjectKind::kPedestrian: return {220, 120, 150};
    case ObjectKind::kCyclist: return {100, 200, 90};
    case ObjectKind::kMotorcycle: return {180, 70, 60};
    case ObjectKind::kTrafficCone: return {250, 130, 20};
    case ObjectKind::kBarrier: return {210, 210, 90};
  }
  return {128, 128, 128};
}

Rgb object_color(ObjectColor c) {
  switch (c) {
    case ObjectColor::kWhite: return {235, 235, 235};
    case ObjectColor::kBlack: return {25, 25, 25};
    case ObjectColor::kGray: return {140, 140, 140};
    case ObjectColor::kRed: return {200, 30, 30};
    case ObjectColor::kBlue: return {30, 60, 200};
    case ObjectColor::kGreen: return {30, 160, 50};
    case ObjectColor::kYellow: return {230, 210, 30};
    case ObjectColor::kOrange: return {240, 130, 20};
  }
  return {128, 128, 128};
}

// Distinct per-label stroke colours, in the spirit of instance-mask ids.
Rgb label_color(int label) {
  static constexpr Rgb kPalette[] = {{255, 59, 48},  {52, 199, 89},  {0, 122, 255}, {255, 204, 0},
                                     {175, 82, 222}, {255, 149, 0},  {90, 200, 250}, {255, 45, 85},
                                     {162, 132, 94}, {88, 86, 214},  {0, 199, 190}, {142, 142, 147}};
  return kPalette[static_cast<std::size_t>(label) % std::size(kPalette)];
}

PixelRect centered_rect(Vec2 c, Vec2 size) { return {c - size * 0.5, c + size * 0.5}; }

bool overlaps(const PixelRect& a, const PixelRect& b) {
  return a.x0() < b.x1() && b.x0() < a.x1() && a.y0() < b.y1() && b.y0() < a.y1();
}

// One-dimensional squared Euclidean distance transform (lower envelope of
// parabolas). `f` holds 0 at sites and +inf elsewhere.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[0]] == kInf) {
      v[0] = q;
      continue;
    }
    double s;
    while (true) {
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (f[v[0]] == kInf) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared distance of every cell to the nearest obstacle cell.
std::vector<double> distance_transform(const std::vector<bool>& obstacle, int w, int h) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = obstacle[i] ? 0.0 : kInf;
  const int m = std::max(w, h);
  std::vector<double> f(m), d(m), z(m + 1);
  std::vector<int> v(m);
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[x];
  }
  return grid;
}

Vec2 clamp_anchor(Vec2 a, Vec2 size, int width, int height) {
  const double hx = std::min(size.x / 2.0, width / 2.0);
  const double hy = std::min(size.y / 2.0, height / 2.0);
  return {std::clamp(a.x, hx, width - hx), std::clamp(a.y, hy, height - hy)};
}

// Peak of the distance transform over the part of `box` not covered by
// `obstacles`; ties go to the pixel nearest the box centre.
std::optional<Vec2> interior_peak(const PixelRect& box, const std::vector<PixelRect>& obstacles,
                                  int width, int height) {
  const int x0 = std::max(0, box.x0());
  const int y0 = std::max(0, box.y0());
  const int x1 = std::min(width, box.x1());
  const int y1 = std::min(height, box.y1());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  // One ring of obstacle cells around the region stands in for its border.
  const int w = x1 - x0 + 2;
  const int h = y1 - y0 + 2;
  std::vector<bool> blocked(static_cast<std::size_t>(w) * h, false);
  for (int x = 0; x < w; ++x) {
    blocked[x] = true;
    blocked[static_cast<std::size_t>(h - 1) * w + x] = true;
  }
  for (int y = 0; y < h; ++y) {
    blocked[static_cast<std::size_t>(y) * w] = true;
    blocked[static_cast<std::size_t>(y) * w + w - 1] = true;
  }
  for (const auto& o : obstacles) {
    const int ox0 = std::max(x0, o.x0());
    const int ox1 = std::min(x1, o.x1());
    const int oy0 = std::max(y0, o.y0());
    const int oy1 = std::min(y1, o.y1());
    for (int y = oy0; y < oy1; ++y) {
      for (int x = ox0; x < ox1; ++x) {
        blocked[static_cast<std::size_t>(y - y0 + 1) * w + (x - x0 + 1)] = true;
      }
    }
  }
  const auto dt = distance_transform(blocked, w, h);
  const Vec2 c = box.center();
  double best = 0.0;
  double best_tie = std::numeric_limits<double>::infinity();
  std::optional<Vec2> peak;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double v = dt[static_cast<std::size_t>(y) * w + x];
      if (v <= 0.0) continue;
      const Vec2 p{x0 + x - 1 + 0.5, y0 + y - 1 + 0.5};
      const Vec2 off = p - c;
      const double tie = dot(off, off);
      if (v > best || (v == best && tie < best_tie)) {
        best = v;
        best_tie = tie;
        peak = p;
      }
    }
  }
  return peak;
}

}  // namespace

std::optional<BBox2D> project_box(const CameraRig& camera, const Pose2D& ego, const ObjectState& st,
                                  double height) {
  const Corners base = st.box().corners();
  std::vector<Vec2> pts;
  // Clip each face; the union of clipped faces covers the visible hull.
  auto add_face = [&](const std::vector<CamPoint>& face) {
    for (const auto& p : clip_near(face)) pts.push_back(to_pixel(camera, p));
  };
  std::array<CamPoint, 4> bottom;
  std::array<CamPoint, 4> top;
  for (int i = 0; i < 4; ++i) {
    bottom[i] = to_camera(camera, ego, base[i], 0.0);
    top[i] = to_camera(camera, ego, base[i], height);
  }
  add_face({bottom.begin(), bottom.end()});
  add_face({top.begin(), top.end()});
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    add_face({bottom[i], bottom[j], top[j], top[i]});
  }
  if (pts.empty()) return std::nullopt;

  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = -lo;
  for (const auto& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  lo = {std::clamp(lo.x, 0.0, static_cast<double>(camera.width)),
        std::clamp(lo.y, 0.0, static_cast<double>(camera.height))};
  hi = {std::clamp(hi.x, 0.0, static_cast<double>(camera.width)),
        std::clamp(hi.y, 0.0, static_cast<double>(camera.height))};
  BBox2D box;
  box.rect = {lo, hi};
  if (box.rect.empty()) return std::nullopt;
  box.depth = norm(to_ego_frame(ego, st.pose.position));
  return box;
}

std::vector<BBox2D> occlusion_filter(const std::vector<BBox2D>& boxes, const VisibilityPolicy& policy,
                                     int image_width, int image_height) {
  std::vector<int> ids(static_cast<std::size_t>(image_width) * image_height, -1);
  for (int i = static_cast<int>(boxes.size()) - 1; i >= 0; --i) {
    const PixelRect& r = boxes[i].rect;
    const int x0 = std::max(0, r.x0());
    const int x1 = std::min(image_width, r.x1());
    for (int y = std::max(0, r.y0()), y1 = std::min(image_height, r.y1()); y < y1; ++y) {
      std::fill(ids.begin() + static_cast<long>(y) * image_width + x0,
                ids.begin() + static_cast<long>(y) * image_width + std::max(x0, x1), i);
    }
  }
  std::vector<BBox2D> out;
  for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
    const PixelRect& r = boxes[i].rect;
    const long total = r.pixel_count();
    if (total <= 0) continue;
    long own = 0;
    const int x0 = std::max(0, r.x0());
    const int x1 = std::min(image_width, r.x1());
    for (int y = std::max(0, r.y0()), y1 = std::min(image_height, r.y1()); y < y1; ++y) {
      const int* row = ids.data() + static_cast<long>(y) * image_width;
      own += std::count(row + x0, row + std::max(x0, x1), i);
    }
    const double fraction = static_cast<double>(own) / static_cast<double>(total);
    if (fraction >= policy.min_visible_fraction && own >= policy.min_pixels) out.push_back(boxes[i]);
  }
  return out;
}

std::vector<BBox2D> assign_labels(std::vector<BBox2D> boxes, std::string_view salt) {
  const std::uint64_t base = fnv1a(salt);
  std::sort(boxes.begin(), boxes.end(), [&](const BBox2D& a, const BBox2D& b) {
    const auto ha = fnv1a(a.track_id, base);
    const auto hb = fnv1a(b.track_id, base);
    return ha != hb ? ha < hb : a.track_id < b.track_id;
  });
  for (std::size_t i = 0; i < boxes.size(); ++i) boxes[i].label = static_cast<int>(i);
  return boxes;
}

Vec2 label_text_size(const std::string& text, double scale) {
  const FontMetrics m = font_metrics(scale);
  const int n = static_cast<int>(text.size());
  const double w = n > 0 ? n * m.advance - m.pixel : 0;
  return {w + 2.0 * m.padding, static_cast<double>(m.glyph_h) + 2.0 * m.padding};
}

LabelAssignment place_labels(const std::vector<BBox2D>& boxes, int image_width, int image_height) {
  LabelAssignment out;
  std::vector<PixelRect> placed;
  for (const auto& b : boxes) {
    const std::string text = "<" + std::to_string(b.label) + ">";
    const Vec2 size = label_text_size(text);
    Vec2 anchor;
    if (b.rect.pixel_count() < kSmallBoxPixels) {
      // Small boxes: sit the label just outside, against the top edge, or
      // against the bottom edge when there is no room above.
      const double gap = kStrokeWidth;
      anchor = {b.rect.center().x, b.rect.min.y - gap - size.y / 2.0};
      if (anchor.y - size.y / 2.0 < 0.0) anchor.y = b.rect.max.y + gap + size.y / 2.0;
    } else {
      std::vector<PixelRect> obstacles = placed;
      for (const auto& other : boxes) {
        if (&other != &b && overlaps(other.rect, b.rect)) obstacles.push_back(other.rect);
      }
      anchor = interior_peak(b.rect, obstacles, image_width, image_height).value_or(b.rect.center());
    }
    anchor = clamp_anchor(anchor, size, image_width, image_height);
    out.track_of[b.label] = b.track_id;
    out.anchor[b.label] = anchor;
    out.extent[b.label] = centered_rect(anchor, size);
    placed.push_back(out.extent[b.label]);
  }
  return out;
}

FrameAnnotation annotate_frame(const FrameSnapshot& frame, const CameraRig& camera,
                               const VisibilityPolicy& policy) {
  camera.validate();
  FrameAnnotation fa;
  const Pose2D& ego = frame.ego.state.pose;
  for (const auto& obj : frame.others) {
    if (!obj.state.valid) continue;
    if (distance(obj.state.pose.position, ego.position) > policy.max_range_m) continue;
    auto box = project_box(camera, ego, obj.state, obj.height);
    if (!box) continue;
    box->track_id = obj.track_id;
    fa.projected.push_back(std::move(*box));
  }
  std::sort(fa.projected.begin(), fa.projected.end(), [](const BBox2D& a, const BBox2D& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.track_id < b.track_id;
  });
  auto survivors = occlusion_filter(fa.projected, policy, camera.width, camera.height);
  fa.visible = assign_labels(std::move(survivors), frame.scenario_id);
  fa.labels = place_labels(fa.visible, camera.width, camera.height);
  return fa;
}

AnnotationPlan build_plan(const FrameSnapshot& frame, const std::vector<Polygon>& drivable,
                          const CameraRig& camera, const FrameAnnotation& annot,
                          const RenderOptions& opts) {
  AnnotationPlan plan;
  plan.width = camera.width;
  plan.height = camera.height;
  const double w = camera.width;
  const double h = camera.height;
  const Pose2D& ego = frame.ego.state.pose;

  plan.commands.push_back(FillPolygon{{150, 185, 225}, {{0, 0}, {w, 0}, {w, h / 2}, {0, h / 2}}});
  plan.commands.push_back(FillPolygon{{95, 110, 80}, {{0, h / 2}, {w, h / 2}, {w, h}, {0, h}}});
  for (const auto& poly : drivable) {
    std::vector<CamPoint> cam;
    for (const auto& p : poly) cam.push_back(to_camera(camera, ego, p, 0.0));
    std::vector<Vec2> px;
    for (const auto& p : clip_near(cam)) px.push_back(to_pixel(camera, p));
    if (px.size() >= 3) plan.commands.push_back(FillPolygon{{72, 72, 76}, std::move(px)});
  }

  // Painter's order: far to near.
  for (auto it = annot.projected.rbegin(); it != annot.projected.rend(); ++it) {
    const FrameObject* obj = nullptr;
    for (const auto& o : frame.others) {
      if (o.track_id == it->track_id) obj = &o;
    }
    if (obj == nullptr) continue;
    const Rgb c = obj->color ? object_color(*obj->color) : kind_color(obj->kind);
    const PixelRect& r = it->rect;
    plan.commands.push_back(
        FillPolygon{c, {r.min, {r.max.x, r.min.y}, r.max, {r.min.x, r.max.y}}});
  }

  for (const auto& b : annot.visible) {
    plan.commands.push_back(StrokeRect{label_color(b.label), kStrokeWidth, b.rect});
  }
  for (const auto& b : annot.visible) {
    plan.commands.push_back(LabelText{"<" + std::to_string(b.label) + ">",
                                      annot.labels.anchor.at(b.label), kLabelScale, kWhite, kBlack});
  }
  if (opts.highlight_label) {
    auto it = annot.labels.extent.find(*opts.highlight_label);
    if (it != annot.labels.extent.end()) {
      const double m = kStrokeWidth;
      plan.commands.push_back(
          HighlightRect{kWhite, kStrokeWidth, {it->second.min - Vec2{m, m}, it->second.max + Vec2{m, m}}});
    }
  }
  return plan;
}

RenderedFrame render_frame(const FrameSnapshot& frame, const std::vector<Polygon>& drivable,
                           const CameraRig& camera, const FrameAnnotation& annot,
                           const RenderOptions& opts) {
  RenderedFrame out;
  out.plan = build_plan(frame, drivable, camera, annot, opts);
  Image img(camera.width, camera.height);
  img.execute(out.plan);
  out.png = encode_png(img);
  return out;
}

namespace {

nlohmann::ordered_json rgb_json(const Rgb& c) { return {c[0], c[1], c[2]}; }
nlohmann::ordered_json vec_json(const Vec2& v) { return {v.x, v.y}; }
nlohmann::ordered_json rect_json(const PixelRect& r) { return {vec_json(r.min), vec_json(r.max)}; }

}  // namespace

std::string AnnotationPlan::to_json() const {
  using J = nlohmann::ordered_json;
  J root;
  root["width"] = width;
  root["height"] = height;
  J cmds = J::array();
  for (const auto& cmd : commands) {
    J j;
    std::visit(
        [&j](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, FillPolygon>) {
            j["op"] = "fill_polygon";
            j["color"] = rgb_json(c.color);
            J pts = J::array();
            for (const auto& p : c.points) pts.push_back(vec_json(p));
            j["points"] = std::move(pts);
          } else if constexpr (std::is_same_v<T, StrokeRect>) {
            j["op"] = "stroke_rect";
            j["color"] = rgb_json(c.color);
            j["width"] = c.width;
            j["rect"] = rect_json(c.rect);
          } else if constexpr (std::is_same_v<T, LabelText>) {
            j["op"] = "label_text";
            j["text"] = c.text;
            j["anchor"] = vec_json(c.anchor);
            j["scale"] = c.scale;
            j["fg"] = rgb_json(c.fg);
            j["bg"] = rgb_json(c.bg);
          } else {
            j["op"] = "highlight_rect";
            j["color"] = rgb_json(c.color);
            j["width"] = c.width;
            j["rect"] = rect_json(c.rect);
          }
        },
        cmd);
    cmds.push_back(std::move(j));
  }
  root["commands"] = std::move(cmds);
  return root.dump(1);
}

}  // namespace scenevqa
