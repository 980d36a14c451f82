#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scenevqa/dynamics.hpp"
#include "scenevqa/response_parser.hpp"
#include "scenevqa/rng.hpp"
#include "scenevqa/scenario.hpp"
#include "scenevqa/scene_graph.hpp"

namespace scenevqa {

enum class QuestionType {
  kIdentifyDistance,
  kIdentifyPosition,
  kIdentifyHeading,
  kIdentifyColor,
  kIdentifyType,
  kIdentifyLeftmost,
  kIdentifyRightmost,
  kIdentifyClosest,
  kIdentifyFrontmost,
  kIdentifyBackmost,
  kRelativeDistance,
  kRelativePosition,
  kRelativeHeading,
  kRelativePredictCrashStill,
  kRelativePredictCrashDynamic,
  kPickCloser,
  kOrderLeftmost,
  kOrderRightmost,
  kOrderClosest,
  kOrderFrontmost,
  kOrderBackmost,
  kDescribeSector,
  kDescribeDistance,
  kDescribeScenario,
  kEmbodiedDistance,
  kEmbodiedSideness,
  kEmbodiedCollision,
  kPredictCrashEgoStill,
  kPredictCrashEgoDynamic,
  kGrounding,
};
inline constexpr std::size_t kQuestionTypeCount = 30;
const std::array<QuestionType, kQuestionTypeCount>& all_question_types();

std::string_view to_string(QuestionType t);
std::optional<QuestionType> parse_question_type(std::string_view s);

enum class SuperType { kSpatial, kEmbodied, kGrounding };
std::string_view to_string(SuperType s);
SuperType supertype(QuestionType t);

bool is_train_only(QuestionType t);
/// Crash and collision questions, answered with the fixed (A) Yes (B) No.
bool is_yes_no(QuestionType t);

// ---------------------------------------------------------------------------
// Errors.

/// The frame cannot support this question type; the generator skips it.
class Unsupported : public std::runtime_error {
 public:
  Unsupported(QuestionType type, std::string reason)
      : std::runtime_error(std::string(to_string(type)) + ": " + reason),
        type_(type),
        reason_(std::move(reason)) {}
  QuestionType type() const { return type_; }
  const std::string& reason() const { return reason_; }

 private:
  QuestionType type_;
  std::string reason_;
};

class InsufficientCandidates : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Templates.

struct QuestionTemplates {
  int version{0};
  std::string choices_prefix;
  std::string answer_instruction;
  std::map<QuestionType, std::string> bodies;

  /// Throws TemplateError if a type is missing or malformed.
  static QuestionTemplates parse(std::string_view json_text);
  /// The set compiled into the library.
  static const QuestionTemplates& builtin();
};

// ---------------------------------------------------------------------------
// Assumptions and settings.

/// How a participant of a crash question moves during the prediction window.
enum class Motion { kFrozen, kReplay };

/// Motion of (<id1>, <id2>) for two-object crash questions and of (other,
/// ego) for the ego crash questions. embodied_collision always drives the ego
/// with <action>; only the target's motion is configurable.
struct CrashAssumptions {
  std::array<Motion, 2> relative_still{Motion::kFrozen, Motion::kFrozen};
  std::array<Motion, 2> relative_dynamic{Motion::kReplay, Motion::kReplay};
  std::array<Motion, 2> ego_still{Motion::kReplay, Motion::kFrozen};
  std::array<Motion, 2> ego_dynamic{Motion::kReplay, Motion::kReplay};
  Motion embodied_target{Motion::kFrozen};
};

struct QaSettings {
  SpatialVocab vocab;
  VehicleParams vehicle;
  ActionCatalog catalog{ActionCatalog::default_catalog()};
  std::vector<double> durations_s{0.5, 1.0, 2.0};
  double crash_horizon_s{3.0};
  CrashAssumptions crash;
  /// embodied_sideness: lateral offsets within this band count as "front".
  double sideness_band_m{0.25};
  /// embodied_sideness is skipped when the ego would move less than this.
  double sideness_min_travel_m{0.5};

  void validate() const;
};

/// What a question is asked about. `ids` fill <id1>, <id2>, <id3> in order.
struct BoundParams {
  std::vector<int> ids;
  std::optional<std::string> action;
  std::optional<double> duration_s;

  friend bool operator==(const BoundParams&, const BoundParams&) = default;
};

/// Everything a question about one frame may consult.
struct QaContext {
  const ScenarioRecord& scenario;
  const SceneGraph& graph;
  const QaSettings& settings;
};

struct Question {
  QuestionType type;
  BoundParams params;
  std::string text;  // template body with parameters substituted
};

struct Answer {
  std::string text;       // canonical option text
  std::string reasoning;  // explanation body, without the choice mapping
};

// ---------------------------------------------------------------------------
// Pipeline stages.

/// All parameter bindings the frame supports for `type`, in a canonical order.
/// Throws Unsupported when there are none.
std::vector<BoundParams> candidate_bindings(QuestionType type, const QaContext& ctx);

/// Substitutes `params` into the template body.
std::string render_question(QuestionType type, const BoundParams& params, const QaContext& ctx,
                            const QuestionTemplates& templates = QuestionTemplates::builtin());

/// Draws one binding uniformly and renders it.
Question instantiate(QuestionType type, const QaContext& ctx, Rng& rng,
                     const QuestionTemplates& templates = QuestionTemplates::builtin());

/// Ground truth. Throws UnknownLabel for labels absent from the graph and
/// Unsupported when the binding has no well-defined answer.
Answer answer_query(QuestionType type, const BoundParams& params, const QaContext& ctx);

/// One to three wrong option texts, distinct from the truth and each other.
/// Throws InsufficientCandidates when not even one exists.
std::vector<std::string> gen_distractors(QuestionType type, const BoundParams& params,
                                         const Answer& truth, const QaContext& ctx, Rng& rng);

struct QARecord {
  std::string id;
  QuestionType type{QuestionType::kIdentifyDistance};
  std::string question;  // full prompt: body, lettered options, answer instruction
  std::vector<McOption> options;
  char answer{'A'};
  std::string explanation;
  std::string image_ref;
  std::string scenario_id;
  int step{0};
  SourceTag domain{SourceTag::kSynthetic};
  std::string split;
  BoundParams params;

  std::string to_json_line() const;  // no trailing newline
  static QARecord from_json_line(std::string_view line);
};

/// Shuffles the options (yes/no questions keep A = Yes, B = No), records the
/// answer letter and composes the prompt and explanation. Frame metadata is
/// left for the caller.
QARecord format_mcq(const Question& q, const Answer& truth, const std::vector<std::string>& distractors,
                    Rng& rng, const QuestionTemplates& templates = QuestionTemplates::builtin());

/// Every question type placeholder such as <id1> or <speed>; numeric labels
/// like <3> are not placeholders.
bool has_unresolved_placeholder(std::string_view text);

/// Recomputes the answer for a finished record and checks that exactly one
/// option carries it, under the recorded letter. Returns a failure message,
/// or nothing when the record is sound.
std::optional<std::string> audit_record(const QARecord& rec, const QaContext& ctx);

}  // namespace scenevqa
