#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scenevqa/geometry.hpp"

namespace scenevqa {

// ---------------------------------------------------------------------------
// Errors raised while loading or querying scenarios.

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The file does not follow the scenario schema. `field()` is a JSON-path-like
/// locator such as `tracks[2].states[5].hx`.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// ---------------------------------------------------------------------------

constexpr double kStepSeconds = 0.1;
constexpr int kStepsPerDecision = 5;

struct Pose2D {
  Vec2 position;
  Vec2 heading{1.0, 0.0};
};

struct ObjectState {
  Pose2D pose;
  double speed{0.0};
  Vec2 half_extents{0.5, 0.5};
  bool valid{true};

  OrientedBox box() const { return {pose.position, pose.heading, half_extents}; }
};

enum class ObjectKind {
  kSedan,
  kSuv,
  kPickup,
  kTruck,
  kBus,
  kPedestrian,
  kCyclist,
  kMotorcycle,
  kTrafficCone,
  kBarrier,
};
inline constexpr std::size_t kObjectKindCount = 10;

enum class ObjectColor { kWhite, kBlack, kGray, kRed, kBlue, kGreen, kYellow, kOrange };
inline constexpr std::size_t kObjectColorCount = 8;

enum class SourceTag { kReal, kSim, kSynthetic };

std::string_view to_string(ObjectKind k);
std::string_view to_string(ObjectColor c);
std::string_view to_string(SourceTag t);
std::optional<ObjectKind> parse_kind(std::string_view s);
std::optional<ObjectColor> parse_color(std::string_view s);
std::optional<SourceTag> parse_source_tag(std::string_view s);

/// Human wording used in question text ("traffic cone" rather than the
/// schema token "traffic_cone").
std::string_view kind_phrase(ObjectKind k);

struct Track {
  std::string id;
  ObjectKind kind{ObjectKind::kSedan};
  std::optional<ObjectColor> color;
  double height{1.5};
  std::vector<ObjectState> states;
};

/// A replayable traffic log. Immutable once loaded.
struct ScenarioRecord {
  std::string id;
  double dt{kStepSeconds};
  int horizon{0};
  std::string ego_id;
  std::vector<Track> tracks;
  std::vector<Polygon> drivable;
  Vec2 destination;
  SourceTag source_tag{SourceTag::kSynthetic};

  const Track& ego() const;
  const Track* find_track(std::string_view id) const;
  std::vector<Vec2> ego_positions() const;
  bool on_drivable(const Vec2& p) const;
};

struct CameraRig {
  double fov_deg{60.0};
  int width{1920};
  int height{1080};
  double mount_height{1.6};
  double forward_offset{2.3};

  static CameraRig generation() { return {}; }
  static CameraRig closed_loop() { return {60.0, 1600, 900, 1.6, 2.3}; }
  void validate() const;
};

/// One object as seen at a particular step, with its track metadata.
struct FrameObject {
  std::string track_id;
  ObjectKind kind{ObjectKind::kSedan};
  std::optional<ObjectColor> color;
  double height{1.5};
  ObjectState state;
};

struct FrameSnapshot {
  std::string scenario_id;
  int step{0};
  SourceTag source_tag{SourceTag::kSynthetic};
  FrameObject ego;
  std::vector<FrameObject> others;
};

/// Throws IoError, SchemaError or InvariantError.
ScenarioRecord load_scenario(const std::filesystem::path& path);
ScenarioRecord parse_scenario(std::string_view json_text);

/// Checks every type invariant, throwing InvariantError on the first violation.
void validate_scenario(const ScenarioRecord& s);

/// Canonical serialization: fixed key order, two-space indent, trailing newline.
std::string serialize_scenario(const ScenarioRecord& s);
void save_scenario(const ScenarioRecord& s, const std::filesystem::path& path);

FrameSnapshot frame_at(const ScenarioRecord& s, int step);

/// World point into the ego frame (x forward, y left).
Vec2 to_ego_frame(const Pose2D& ego, const Vec2& p);
/// Inverse of to_ego_frame.
Vec2 from_ego_frame(const Pose2D& ego, const Vec2& local);

}  // namespace scenevqa
