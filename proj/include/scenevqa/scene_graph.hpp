#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scenevqa/annotation.hpp"
#include "scenevqa/geometry.hpp"
#include "scenevqa/scenario.hpp"

namespace scenevqa {

class UnknownLabel : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Directed relation "B is <edge> A".
enum class SpatialEdge { kL, kLb, kLf, kB, kF, kR, kRb, kRf };
inline constexpr SpatialEdge kAllEdges[] = {SpatialEdge::kL, SpatialEdge::kLb, SpatialEdge::kLf,
                                            SpatialEdge::kB, SpatialEdge::kF,  SpatialEdge::kR,
                                            SpatialEdge::kRb, SpatialEdge::kRf};

enum class Sidedness { kLeft, kRight, kNone };
/// front_back reuses Sidedness: kLeft means front, kRight means back.
inline constexpr Sidedness kFront = Sidedness::kLeft;
inline constexpr Sidedness kBack = Sidedness::kRight;

std::string_view to_string(SpatialEdge e);
/// "to the left of", "to the right and behind", ...
std::string_view edge_phrase(SpatialEdge e);
SpatialEdge mirror(SpatialEdge e);

/// Eight 45-degree sectors, clockwise from straight ahead.
enum class Sector { kFront, kFrontRight, kRight, kRearRight, kRear, kRearLeft, kLeft, kFrontLeft };
inline constexpr int kSectorCount = 8;
std::string_view to_string(Sector s);
std::optional<Sector> parse_sector(std::string_view s);

/// Sector containing an ego-frame vector. Each sector is half-open on its
/// counter-clockwise side, so boundaries belong to the sector clockwise of
/// them; the zero vector maps to kFront.
Sector sector_of(const Vec2& ego_local);
/// Minimal angular separation between two sector centres, in degrees.
double sector_separation_deg(Sector a, Sector b);

/// Discretization of continuous quantities into question vocabulary.
struct SpatialVocab {
  std::vector<double> distance_bounds{2.0, 10.0, 30.0};  // bucket upper bounds (exclusive)
  std::vector<std::string> distance_words{"very close", "close", "medium", "far"};
  double same_heading_deg{30.0};
  double heading_distractor_min_deg{90.0};

  std::size_t distance_bucket(double meters) const;
  const std::string& distance_word(double meters) const;
  void validate() const;
};

struct SceneNode {
  int label{-1};
  std::string track_id;
  ObjectKind kind{ObjectKind::kSedan};
  std::optional<ObjectColor> color;
  double height{0.0};
  Corners corners{};
  Vec2 position;
  Vec2 heading{1.0, 0.0};
  double speed{0.0};
  Vec2 ego_center;  // centre in the ego frame
  double distance{0.0};
};

inline constexpr int kEgoLabel = -1;

struct SceneGraph {
  std::string scenario_id;
  int step{0};
  SceneNode ego;
  std::map<int, SceneNode> nodes;
  /// (a, b) -> relation of b with respect to a; absent when neither axis separates.
  std::map<std::pair<int, int>, SpatialEdge> edges;
  /// b -> relation of b with respect to the ego box.
  std::map<int, SpatialEdge> ego_edges;

  const SceneNode& node(int label) const;
  std::vector<int> labels() const;
  std::optional<SpatialEdge> edge(int a, int b) const;

  /// Debug dump.
  std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Relations between boxes.

/// Left iff every vertex of B lies strictly further along rot90ccw(V) than
/// every vertex of A; Right symmetrically; otherwise None.
Sidedness sidedness(const Corners& a, const Corners& b, const Vec2& v);

/// Front iff every vertex of B projects onto `heading` strictly beyond A's
/// furthest vertex; Back symmetrically; otherwise None.
Sidedness front_back(const Corners& a, const Corners& b, const Vec2& heading);

/// Combines sidedness and front_back with the ego heading as reference.
std::optional<SpatialEdge> spatial_edge(const Corners& a, const Corners& b, const Vec2& ego_heading);

/// Nodes are the labelled objects within policy range; edges cover every
/// ordered pair of nodes plus every node relative to the ego.
SceneGraph build_scene_graph(const FrameSnapshot& frame, const VisibilityPolicy& policy,
                             const LabelAssignment& labels);

// ---------------------------------------------------------------------------
// Queries. All break ties by ascending label.

enum class Extreme { kClosest, kLeftmost, kRightmost, kFrontmost, kBackmost };
std::string_view to_string(Extreme e);

/// Label of the most extreme node. Throws UnknownLabel on an empty graph.
int extreme_label(const SceneGraph& g, Extreme e);
/// `labels` sorted from most to least extreme.
std::vector<int> order_by(const SceneGraph& g, Extreme e, std::vector<int> labels);

Sector position_sector(const SceneGraph& g, int label);
/// Direction of the node's heading, as a sector relative to the ego heading.
Sector heading_sector(const SceneGraph& g, int label);
std::vector<int> labels_in_sector(const SceneGraph& g, Sector s);
std::vector<int> labels_in_distance_bucket(const SceneGraph& g, std::size_t bucket,
                                           const SpatialVocab& vocab);
double relative_distance(const SceneGraph& g, int a, int b);
/// Relation of `b` with respect to `a`, from the ego's point of view.
std::optional<SpatialEdge> relative_position(const SceneGraph& g, int a, int b);
/// Angle between the two headings is within vocab.same_heading_deg.
bool same_heading(const SceneGraph& g, int a, int b, const SpatialVocab& vocab);

}  // namespace scenevqa
