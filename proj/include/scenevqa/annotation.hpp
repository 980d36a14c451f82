#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scenevqa/geometry.hpp"
#include "scenevqa/scenario.hpp"

namespace scenevqa {

/// Which projected objects count as visible.
struct VisibilityPolicy {
  double min_visible_fraction{0.5};
  int min_pixels{1200};
  double max_range_m{75.0};
};

/// Pixel rectangle. A pixel (i, j) is covered iff its centre (i + 0.5, j + 0.5)
/// lies in [min, max), so integer corners cover exactly (max - min) pixels
/// per axis.
struct PixelRect {
  Vec2 min;
  Vec2 max;

  int x0() const;
  int y0() const;
  int x1() const;
  int y1() const;
  long pixel_count() const;
  Vec2 center() const { return (min + max) * 0.5; }
  bool empty() const { return pixel_count() <= 0; }
};

struct BBox2D {
  PixelRect rect;
  int label{-1};
  double depth{0.0};
  std::string track_id;
};

/// Label numbering and where each label's text is anchored.
struct LabelAssignment {
  std::map<int, std::string> track_of;  // label -> track id
  std::map<int, Vec2> anchor;           // label -> pixel centre of the label text
  std::map<int, PixelRect> extent;      // label -> label text box (background)

  std::optional<int> label_of(const std::string& track_id) const;
  std::size_t size() const { return track_of.size(); }
};

// ---------------------------------------------------------------------------
// Draw commands.

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

/// Fixed annotation style: boxes stroked 2 px wide, label text at scale 1.0,
/// white text on a black background.
inline constexpr int kStrokeWidth = 2;
inline constexpr double kLabelScale = 1.0;
/// Boxes enclosing fewer pixels get their label moved outside the box.
inline constexpr long kSmallBoxPixels = 1600;

struct FillPolygon {
  Rgb color;
  std::vector<Vec2> points;
};
struct StrokeRect {
  Rgb color;
  int width{kStrokeWidth};
  PixelRect rect;
};
struct LabelText {
  std::string text;
  Vec2 anchor;
  double scale{kLabelScale};
  Rgb fg{kWhite};
  Rgb bg{kBlack};
};
struct HighlightRect {
  Rgb color{kWhite};
  int width{kStrokeWidth};
  PixelRect rect;
};

using DrawCommand = std::variant<FillPolygon, StrokeRect, LabelText, HighlightRect>;

struct AnnotationPlan {
  int width{0};
  int height{0};
  std::vector<DrawCommand> commands;

  /// `{"width":..,"height":..,"commands":[...]}` with fixed key order.
  std::string to_json() const;
};

// ---------------------------------------------------------------------------

/// Projects the object's 3D box (ground to `height`) through the ego camera.
/// Returns nothing when no part of the box is in front of the camera or the
/// projection misses the image. `depth` is the ground distance from the ego.
std::optional<BBox2D> project_box(const CameraRig& camera, const Pose2D& ego, const ObjectState& st,
                                  double height);

/// Painter's-algorithm id buffer. `boxes` must be sorted nearest first; they
/// are painted far to near and each survives iff its own pixels make up at
/// least `min_visible_fraction` of its rectangle and number `min_pixels`.
/// Output keeps input order.
std::vector<BBox2D> occlusion_filter(const std::vector<BBox2D>& boxes, const VisibilityPolicy& policy,
                                     int image_width, int image_height);

/// Numbers boxes 0..n-1 in an order keyed on a hash of the track id, so
/// label numbers carry no spatial information.
std::vector<BBox2D> assign_labels(std::vector<BBox2D> boxes, std::string_view salt);

/// Pixel size of the rendered text "<label>" including its background margin.
Vec2 label_text_size(const std::string& text, double scale = kLabelScale);

/// Chooses an anchor for every labelled box, in label order.
LabelAssignment place_labels(const std::vector<BBox2D>& boxes, int image_width, int image_height);

/// The full per-frame visibility pipeline: range cut, projection, occlusion
/// filter, label numbering, label placement.
struct FrameAnnotation {
  std::vector<BBox2D> projected;  // every projected object in range, nearest first
  std::vector<BBox2D> visible;    // survivors with labels assigned, by label
  LabelAssignment labels;
};
FrameAnnotation annotate_frame(const FrameSnapshot& frame, const CameraRig& camera,
                               const VisibilityPolicy& policy);

struct RenderOptions {
  std::optional<int> highlight_label;  // grounding questions
};

struct RenderedFrame {
  std::vector<std::uint8_t> png;
  AnnotationPlan plan;
};

/// Plan only, without rasterizing.
AnnotationPlan build_plan(const FrameSnapshot& frame, const std::vector<Polygon>& drivable,
                          const CameraRig& camera, const FrameAnnotation& annot,
                          const RenderOptions& opts = {});

RenderedFrame render_frame(const FrameSnapshot& frame, const std::vector<Polygon>& drivable,
                           const CameraRig& camera, const FrameAnnotation& annot,
                           const RenderOptions& opts = {});

}  // namespace scenevqa
