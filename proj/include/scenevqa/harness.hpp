#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenevqa/annotation.hpp"
#include "scenevqa/dynamics.hpp"
#include "scenevqa/response_parser.hpp"
#include "scenevqa/scenario.hpp"
#include "scenevqa/scene_graph.hpp"

namespace scenevqa {

class AgentUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedReply : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------

struct NavCommand {
  std::string distance_word;
  std::string position_word;
  std::string text;
};

/// Where the destination lies from the ego's current pose, in words.
NavCommand nav_command(const Pose2D& ego, const Vec2& destination, const SpatialVocab& vocab);

struct Observation {
  std::string scenario_id;
  int step{0};
  std::vector<std::uint8_t> png;  // empty when the agent does not look at images
  std::string prompt;
};

/// Lettered action options in catalog order, as offered to agents.
std::vector<McOption> action_options(const ActionCatalog& catalog);

std::string build_prompt(const NavCommand& nav, double speed, const ActionCatalog& catalog);

class Agent {
 public:
  virtual ~Agent() = default;
  /// Raw text reply; parsed by the harness.
  virtual std::string act(const Observation& obs) = 0;
  virtual bool needs_image() const { return false; }
};

enum class BaselineKind { kRandom, kBrake, kStraight };

std::unique_ptr<Agent> baseline_agent(BaselineKind kind, std::uint64_t seed,
                                      const ActionCatalog& catalog = ActionCatalog::default_catalog());

struct RemoteAgentOptions {
  std::string url;  // http://host:port/path
  std::chrono::milliseconds timeout{30000};
  int retries{2};   // attempts after the first
};

/// POSTs {image, prompt, meta} and expects {text}. Opens a fresh connection
/// per call, so one instance can serve concurrent episodes.
std::unique_ptr<Agent> remote_agent(const RemoteAgentOptions& opts);

/// "random", "brake", "straight" or "remote:URL".
struct AgentSpec {
  std::string kind;
  std::string url;

  static AgentSpec parse(const std::string& text);
  std::string to_string() const;
  /// Agent for one episode. Random agents are seeded from (seed, scenario id).
  std::unique_ptr<Agent> make(std::uint64_t seed, const std::string& scenario_id, const ActionCatalog& catalog,
                               const RemoteAgentOptions& remote_defaults = {}) const;
};

// ---------------------------------------------------------------------------

struct HarnessConfig {
  CameraRig camera{CameraRig::closed_loop()};
  VisibilityPolicy policy;
  SpatialVocab vocab;
  VehicleParams vehicle;
  ActionCatalog catalog{ActionCatalog::default_catalog()};
  /// Observation PNGs are written here when set.
  std::optional<std::filesystem::path> run_dir;
  /// Render observations even for agents that ignore them.
  bool always_render{false};
};

enum class Termination { kHorizon, kOffRoad, kAborted };
std::string_view to_string(Termination t);

struct DecisionLog {
  int step{0};
  std::string observation_ref;
  std::string raw_response;
  std::string action;
  bool parse_failed{false};
  EgoState ego;  // state when the decision was taken
};

struct EpisodeResult {
  std::string scenario_id;
  std::string agent;
  std::vector<DecisionLog> decisions;
  Termination termination{Termination::kHorizon};
  bool collided{false};
  std::optional<int> first_collision_step;
  double traveled{0.0};
  double route_len{0.0};
  std::vector<Vec2> driven_traj;
  std::vector<Vec2> gt_traj;
  Vec2 destination;
  std::string error;  // set when aborted

  bool aborted() const { return termination == Termination::kAborted; }
  int parse_failures() const;
  std::string to_json_line() const;
};

/// One closed-loop episode. Agent failures abort the episode and are
/// recorded in the result rather than thrown.
EpisodeResult run_episode(const ScenarioRecord& scenario, Agent& agent, const std::string& agent_name,
                          const HarnessConfig& config);

/// Episodes in input order, run on up to `jobs` workers.
std::vector<EpisodeResult> run_suite(const std::vector<ScenarioRecord>& scenarios, const AgentSpec& spec,
                                     std::uint64_t seed, const HarnessConfig& config, int jobs,
                                     const RemoteAgentOptions& remote = {});

// ---------------------------------------------------------------------------
// Metrics.

/// `driven` extended with its last point to the length of `gt`.
std::vector<Vec2> pad_trajectory(std::vector<Vec2> driven, std::size_t length);
/// Mean per-step L2 distance after padding.
double average_displacement(const std::vector<Vec2>& driven, const std::vector<Vec2>& gt);
double final_displacement(const std::vector<Vec2>& driven, const Vec2& destination);
/// traveled / route_len clamped to [0, 1]; a zero-length route counts as complete.
double route_completion(double traveled, double route_len);

struct MetricsReport {
  std::size_t episodes{0};
  std::size_t aborted{0};
  double route_completion{0.0};
  double off_road_rate{0.0};
  double collision_rate{0.0};
  double ade{0.0};
  double fde{0.0};
  double parse_fail_rate{0.0};

  std::string to_json() const;
  std::string to_table() const;
};

/// Aggregates completed episodes; aborted ones are counted but not scored.
/// Throws EmptyInput when there is nothing to score.
MetricsReport compute_metrics(const std::vector<EpisodeResult>& results);

EpisodeResult episode_from_json_line(const std::string& line);

}  // namespace scenevqa
