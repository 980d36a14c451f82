#include "scenevqa/qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>

#include "json.hpp"

namespace scenevqa {

namespace detail {
extern const std::string_view kTemplatesJson;
}

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<QuestionType, kQuestionTypeCount> kAllTypes = {
    QuestionType::kIdentifyDistance,         QuestionType::kIdentifyPosition,
    QuestionType::kIdentifyHeading,          QuestionType::kIdentifyColor,
    QuestionType::kIdentifyType,             QuestionType::kIdentifyLeftmost,
    QuestionType::kIdentifyRightmost,        QuestionType::kIdentifyClosest,
    QuestionType::kIdentifyFrontmost,        QuestionType::kIdentifyBackmost,
    QuestionType::kRelativeDistance,         QuestionType::kRelativePosition,
    QuestionType::kRelativeHeading,          QuestionType::kRelativePredictCrashStill,
    QuestionType::kRelativePredictCrashDynamic, QuestionType::kPickCloser,
    QuestionType::kOrderLeftmost,            QuestionType::kOrderRightmost,
    QuestionType::kOrderClosest,             QuestionType::kOrderFrontmost,
    QuestionType::kOrderBackmost,            QuestionType::kDescribeSector,
    QuestionType::kDescribeDistance,         QuestionType::kDescribeScenario,
    QuestionType::kEmbodiedDistance,         QuestionType::kEmbodiedSideness,
    QuestionType::kEmbodiedCollision,        QuestionType::kPredictCrashEgoStill,
    QuestionType::kPredictCrashEgoDynamic,   QuestionType::kGrounding,
};

constexpr std::array<std::string_view, kQuestionTypeCount> kTypeNames = {
    "identify_distance",     "identify_position",     "identify_heading",
    "identify_color",        "identify_type",         "identify_leftmost",
    "identify_rightmost",    "identify_closest",      "identify_frontmost",
    "identify_backmost",     "relative_distance",     "relative_position",
    "relative_heading",      "relative_predict_crash_still", "relative_predict_crash_dynamic",
    "pick_closer",           "order_leftmost",        "order_rightmost",
    "order_closest",         "order_frontmost",       "order_backmost",
    "describe_sector",       "describe_distance",     "describe_scenario",
    "embodied_distance",     "embodied_sideness",     "embodied_collision",
    "predict_crash_ego_still", "predict_crash_ego_dynamic", "grounding",
};

constexpr std::string_view kYes = "Yes";
constexpr std::string_view kNo = "No";
constexpr std::array<std::string_view, 3> kSideWords = {"left", "front", "right"};
constexpr double kTieEps = 1e-6;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string label_text(int label) { return "<" + std::to_string(label) + ">"; }

std::string join_labels(const std::vector<int>& labels) {
  if (labels.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += label_text(labels[i]);
  }
  return out;
}

std::string action_phrase(std::string_view name) {
  static const std::map<std::string_view, std::string_view> kPhrases = {
      {"TURN_LEFT", "turn left"},          {"TURN_RIGHT", "turn right"},
      {"KEEP_STRAIGHT", "keep straight"},  {"SPEED_UP", "speed up"},
      {"BRAKE", "brake"},                  {"BIG_LEFT", "make a sharp left turn"},
      {"BIG_RIGHT", "make a sharp right turn"}, {"STOP", "stop"}};
  if (auto it = kPhrases.find(name); it != kPhrases.end()) return std::string(it->second);
  std::string out(name);
  for (auto& c : out) c = c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string duration_phrase(double s) { return fmt("%.1f seconds", s); }
std::string speed_phrase(double v) { return fmt("%.1f m/s", v); }
std::string meters(double m) { return fmt("%.1f m", m); }

Extreme extreme_of(QuestionType t) {
  switch (t) {
    case QuestionType::kIdentifyLeftmost:
    case QuestionType::kOrderLeftmost: return Extreme::kLeftmost;
    case QuestionType::kIdentifyRightmost:
    case QuestionType::kOrderRightmost: return Extreme::kRightmost;
    case QuestionType::kIdentifyFrontmost:
    case QuestionType::kOrderFrontmost: return Extreme::kFrontmost;
    case QuestionType::kIdentifyBackmost:
    case QuestionType::kOrderBackmost: return Extreme::kBackmost;
    default: return Extreme::kClosest;
  }
}

double extreme_key(const SceneNode& n, Extreme e) {
  switch (e) {
    case Extreme::kClosest: return n.distance;
    case Extreme::kLeftmost: return -n.ego_center.y;
    case Extreme::kRightmost: return n.ego_center.y;
    case Extreme::kFrontmost: return -n.ego_center.x;
    case Extreme::kBackmost: return n.ego_center.x;
  }
  return 0.0;
}

// Human reading of where a node sits, for explanations.
std::string where(const SceneNode& n, const SpatialVocab& vocab) {
  return std::string(to_string(sector_of(n.ego_center))) + ", " + vocab.distance_word(n.distance) +
         " (" + meters(n.distance) + ")";
}

int steps_for(double seconds) { return static_cast<int>(std::lround(seconds / kStepSeconds)); }

int remaining_steps(const QaContext& ctx) { return ctx.scenario.horizon - 1 - ctx.graph.step; }

const Track& track_of(const QaContext& ctx, int label) {
  const SceneNode& n = ctx.graph.node(label);
  if (label == kEgoLabel) return ctx.scenario.ego();
  const Track* t = ctx.scenario.find_track(n.track_id);
  if (!t) throw UnknownLabel("label " + label_text(label) + " has no track");
  return *t;
}

// Box of a participant k steps into the window; nothing if it is absent then.
std::optional<OrientedBox> box_at(const QaContext& ctx, int label, Motion m, int k) {
  const Track& t = track_of(ctx, label);
  const int step = ctx.graph.step + (m == Motion::kReplay ? k : 0);
  if (step < 0 || step >= static_cast<int>(t.states.size())) return std::nullopt;
  const ObjectState& s = t.states[static_cast<std::size_t>(step)];
  if (!s.valid) return std::nullopt;
  return s.box();
}

struct CrashResult {
  std::optional<int> first_step;
  int window{0};
};

int crash_window(const QaContext& ctx, bool any_replay) {
  int n = steps_for(ctx.settings.crash_horizon_s);
  if (any_replay) n = std::min(n, remaining_steps(ctx));
  return std::max(n, 0);
}

CrashResult pair_crash(const QaContext& ctx, int a, Motion ma, int b, Motion mb) {
  CrashResult r;
  const bool replay = ma == Motion::kReplay || mb == Motion::kReplay;
  r.window = replay ? crash_window(ctx, true) : 0;
  for (int k = 0; k <= r.window; ++k) {
    auto ba = box_at(ctx, a, ma, k);
    auto bb = box_at(ctx, b, mb, k);
    if (ba && bb && obb_overlap(*ba, *bb)) {
      r.first_step = k;
      break;
    }
  }
  return r;
}

EgoState ego_state(const QaContext& ctx) {
  const SceneNode& e = ctx.graph.ego;
  return {{e.position, e.heading}, e.speed};
}

std::vector<EgoState> ego_rollout(const QaContext& ctx, const BoundParams& p) {
  return rollout(ego_state(ctx), *p.action, steps_for(*p.duration_s), ctx.settings.catalog,
                 ctx.settings.vehicle);
}

std::string crash_reasoning(const CrashResult& r, std::string_view who) {
  if (r.window == 0) {
    return std::string(who) + (r.first_step ? " boxes overlap" : " boxes do not overlap") + " at their current poses.";
  }
  if (r.first_step) {
    return std::string(who) + " boxes overlap after " + fmt("%.1f", *r.first_step * kStepSeconds) +
           " s of the prediction window.";
  }
  return std::string(who) + " boxes stay apart over the whole " + fmt("%.1f", r.window * kStepSeconds) +
         " s prediction window.";
}

Answer yes_no(bool yes, std::string reasoning) {
  return {std::string(yes ? kYes : kNo), std::move(reasoning)};
}

std::string side_word(const QaContext& ctx, const std::vector<EgoState>& traj) {
  const Vec2 local = to_ego_frame(traj.front().pose, traj.back().pose.position);
  if (local.y > ctx.settings.sideness_band_m) return "left";
  if (local.y < -ctx.settings.sideness_band_m) return "right";
  return "front";
}

// Grouped answers for the describe_* questions.
using Grouping = std::vector<std::pair<std::string, std::vector<int>>>;

std::string render_grouping(const Grouping& g) {
  std::string out;
  for (const auto& [key, labels] : g) {
    if (labels.empty()) continue;
    if (!out.empty()) out += "; ";
    out += key + ": " + join_labels(labels);
  }
  return out.empty() ? "none" : out;
}

Grouping sector_grouping(const SceneGraph& g) {
  Grouping out;
  for (int s = 0; s < kSectorCount; ++s) {
    out.emplace_back(std::string(to_string(static_cast<Sector>(s))),
                     labels_in_sector(g, static_cast<Sector>(s)));
  }
  return out;
}

Grouping distance_grouping(const SceneGraph& g, const SpatialVocab& vocab) {
  Grouping out;
  for (std::size_t b = 0; b < vocab.distance_words.size(); ++b) {
    out.emplace_back(vocab.distance_words[b], labels_in_distance_bucket(g, b, vocab));
  }
  return out;
}

// Perturbations of a grouping that add or remove exactly one (key, label) element.
std::vector<std::string> grouping_perturbations(const Grouping& g, bool cyclic) {
  std::vector<std::string> out;
  const int n = static_cast<int>(g.size());
  for (int gi = 0; gi < n; ++gi) {
    for (std::size_t li = 0; li < g[gi].second.size(); ++li) {
      Grouping removed = g;
      removed[gi].second.erase(removed[gi].second.begin() + static_cast<std::ptrdiff_t>(li));
      out.push_back(render_grouping(removed));
      const int label = g[gi].second[li];
      for (int d : {-1, 1}) {
        int gj = gi + d;
        if (cyclic) gj = (gj + n) % n;
        if (gj < 0 || gj >= n || gj == gi) continue;
        Grouping added = g;
        auto& dst = added[gj].second;
        dst.insert(std::upper_bound(dst.begin(), dst.end(), label), label);
        out.push_back(render_grouping(added));
      }
    }
  }
  return out;
}

struct SceneEntry {
  int label;
  std::string text;
};

std::string render_entries(const std::vector<SceneEntry>& entries) {
  if (entries.empty()) return "none";
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += "; ";
    out += label_text(e.label) + ": " + e.text;
  }
  return out;
}

std::string describe_object(std::optional<ObjectColor> color, ObjectKind kind, Sector s,
                            const std::string& dist) {
  std::string out;
  if (color) out += std::string(to_string(*color)) + " ";
  out += std::string(kind_phrase(kind)) + " at " + std::string(to_string(s)) + ", " + dist;
  return out;
}

std::vector<SceneEntry> scene_entries(const QaContext& ctx) {
  std::vector<SceneEntry> out;
  for (const auto& [label, n] : ctx.graph.nodes) {
    out.push_back({label, describe_object(n.color, n.kind, sector_of(n.ego_center),
                                          ctx.settings.vocab.distance_word(n.distance))});
  }
  return out;
}

// Takes up to `limit` distinct texts, tier by tier, each tier shuffled.
std::vector<std::string> pick(std::vector<std::vector<std::string>> tiers, const std::string& truth,
                              Rng& rng, std::size_t limit = 3) {
  std::vector<std::string> out;
  std::set<std::string> seen{truth};
  for (auto& tier : tiers) {
    std::vector<std::string> uniq;
    for (auto& t : tier) {
      if (seen.count(t) == 0 && std::find(uniq.begin(), uniq.end(), t) == uniq.end()) uniq.push_back(t);
    }
    rng.shuffle(uniq);
    for (auto& t : uniq) {
      if (out.size() == limit) break;
      seen.insert(t);
      out.push_back(t);
    }
  }
  if (out.empty()) throw InsufficientCandidates("no distractor differs from the truth");
  return out;
}

std::vector<std::string> other_labels(const SceneGraph& g) {
  std::vector<std::string> out;
  for (int l : g.labels()) out.push_back(label_text(l));
  return out;
}

std::vector<std::string> sector_words(const std::vector<Sector>& ss) {
  std::vector<std::string> out;
  for (auto s : ss) out.emplace_back(to_string(s));
  return out;
}

Sector sector_shift(Sector s, int d) {
  return static_cast<Sector>(((static_cast<int>(s) + d) % kSectorCount + kSectorCount) % kSectorCount);
}

std::vector<std::vector<std::string>> distance_tiers(const SpatialVocab& vocab, const std::string& truth) {
  std::vector<std::string> near, rest;
  auto it = std::find(vocab.distance_words.begin(), vocab.distance_words.end(), truth);
  const auto idx = static_cast<std::ptrdiff_t>(it - vocab.distance_words.begin());
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(vocab.distance_words.size()); ++i) {
    (std::abs(i - idx) == 1 ? near : rest).push_back(vocab.distance_words[static_cast<std::size_t>(i)]);
  }
  return {near, rest};
}

void require_labels(QuestionType t, const SceneGraph& g, std::size_t n) {
  if (g.nodes.size() < n) {
    throw Unsupported(t, n == 1 ? "no labeled objects" : "fewer than " + std::to_string(n) + " labeled objects");
  }
}

void require_remaining(QuestionType t, const QaContext& ctx) {
  if (remaining_steps(ctx) < 1) throw Unsupported(t, "no remaining log to replay");
}

}  // namespace

// ---------------------------------------------------------------------------

const std::array<QuestionType, kQuestionTypeCount>& all_question_types() { return kAllTypes; }

std::string_view to_string(QuestionType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<QuestionType> parse_question_type(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == s) return static_cast<QuestionType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(SuperType s) {
  switch (s) {
    case SuperType::kSpatial: return "spatial";
    case SuperType::kEmbodied: return "embodied";
    case SuperType::kGrounding: return "grounding";
  }
  return "spatial";
}

SuperType supertype(QuestionType t) {
  switch (t) {
    case QuestionType::kEmbodiedDistance:
    case QuestionType::kEmbodiedSideness:
    case QuestionType::kEmbodiedCollision:
    case QuestionType::kPredictCrashEgoStill:
    case QuestionType::kPredictCrashEgoDynamic: return SuperType::kEmbodied;
    case QuestionType::kGrounding: return SuperType::kGrounding;
    default: return SuperType::kSpatial;
  }
}

bool is_train_only(QuestionType t) { return t == QuestionType::kDescribeScenario; }

bool is_yes_no(QuestionType t) {
  switch (t) {
    case QuestionType::kRelativeHeading:
    case QuestionType::kRelativePredictCrashStill:
    case QuestionType::kRelativePredictCrashDynamic:
    case QuestionType::kEmbodiedCollision:
    case QuestionType::kPredictCrashEgoStill:
    case QuestionType::kPredictCrashEgoDynamic: return true;
    default: return false;
  }
}

// ---------------------------------------------------------------------------

QuestionTemplates QuestionTemplates::parse(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(std::string("template resource is not valid JSON: ") + e.what());
  }
  QuestionTemplates out;
  try {
    out.version = j.at("version").get<int>();
    out.choices_prefix = j.at("choices_prefix").get<std::string>();
    out.answer_instruction = j.at("answer_instruction").get<std::string>();
    const auto& bodies = j.at("templates");
    for (auto t : kAllTypes) {
      const auto key = std::string(to_string(t));
      if (!bodies.contains(key)) throw TemplateError("missing template for " + key);
      out.bodies[t] = bodies.at(key).get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(std::string("malformed template resource: ") + e.what());
  }
  return out;
}

const QuestionTemplates& QuestionTemplates::builtin() {
  static const QuestionTemplates t = parse(detail::kTemplatesJson);
  return t;
}

void QaSettings::validate() const {
  vocab.validate();
  vehicle.validate();
  if (catalog.size() == 0) throw InvariantError("action catalog is empty");
  if (durations_s.empty()) throw InvariantError("durations must be non-empty");
  for (double d : durations_s) {
    if (!(d > 0.0) || steps_for(d) < 1) throw InvariantError("durations must be at least one step");
  }
  if (!(crash_horizon_s > 0.0)) throw InvariantError("crash_horizon_s must be positive");
  if (!(sideness_band_m >= 0.0) || !(sideness_min_travel_m >= 0.0)) {
    throw InvariantError("sideness thresholds must be non-negative");
  }
}

// ---------------------------------------------------------------------------

std::vector<BoundParams> candidate_bindings(QuestionType type, const QaContext& ctx) {
  const SceneGraph& g = ctx.graph;
  const std::vector<int> labels = g.labels();
  std::vector<BoundParams> out;

  auto singles = [&] {
    for (int l : labels) out.push_back({{l}, {}, {}});
  };
  auto pairs = [&](bool ordered) {
    for (int a : labels) {
      for (int b : labels) {
        if (a == b || (!ordered && a > b)) continue;
        out.push_back({{a, b}, {}, {}});
      }
    }
  };
  auto actions_durations = [&](const std::vector<int>& ids) {
    for (const auto& e : ctx.settings.catalog.entries()) {
      for (double d : ctx.settings.durations_s) out.push_back({ids, e.name, d});
    }
  };

  switch (type) {
    case QuestionType::kIdentifyDistance:
    case QuestionType::kIdentifyPosition:
    case QuestionType::kIdentifyHeading:
    case QuestionType::kIdentifyType:
    case QuestionType::kGrounding:
      require_labels(type, g, 1);
      singles();
      break;
    case QuestionType::kIdentifyColor:
      require_labels(type, g, 1);
      for (int l : labels) {
        if (g.node(l).color) out.push_back({{l}, {}, {}});
      }
      if (out.empty()) throw Unsupported(type, "no colored objects");
      break;
    case QuestionType::kIdentifyLeftmost:
    case QuestionType::kIdentifyRightmost:
    case QuestionType::kIdentifyClosest:
    case QuestionType::kIdentifyFrontmost:
    case QuestionType::kIdentifyBackmost: {
      require_labels(type, g, 2);
      const Extreme e = extreme_of(type);
      const auto order = order_by(g, e, labels);
      if (extreme_key(g.node(order[1]), e) - extreme_key(g.node(order[0]), e) <= kTieEps) {
        throw Unsupported(type, "tie for the extreme object");
      }
      out.push_back({});
      break;
    }
    case QuestionType::kDescribeSector:
    case QuestionType::kDescribeDistance:
    case QuestionType::kDescribeScenario:
      require_labels(type, g, 1);
      out.push_back({});
      break;
    case QuestionType::kRelativeDistance:
    case QuestionType::kRelativeHeading:
      require_labels(type, g, 2);
      pairs(false);
      break;
    case QuestionType::kRelativePosition:
      require_labels(type, g, 2);
      for (int a : labels) {
        for (int b : labels) {
          if (a != b && relative_position(g, b, a)) out.push_back({{a, b}, {}, {}});
        }
      }
      if (out.empty()) throw Unsupported(type, "no separable pair");
      break;
    case QuestionType::kPickCloser:
      require_labels(type, g, 2);
      for (int a : labels) {
        for (int b : labels) {
          if (a < b && std::abs(g.node(a).distance - g.node(b).distance) > kTieEps) {
            out.push_back({{a, b}, {}, {}});
          }
        }
      }
      if (out.empty()) throw Unsupported(type, "all pairs tie on distance");
      break;
    case QuestionType::kRelativePredictCrashStill:
    case QuestionType::kRelativePredictCrashDynamic: {
      require_labels(type, g, 2);
      const auto& m = type == QuestionType::kRelativePredictCrashStill ? ctx.settings.crash.relative_still
                                                                       : ctx.settings.crash.relative_dynamic;
      if (m[0] == Motion::kReplay || m[1] == Motion::kReplay) require_remaining(type, ctx);
      pairs(m[0] != m[1]);
      break;
    }
    case QuestionType::kPredictCrashEgoStill:
    case QuestionType::kPredictCrashEgoDynamic: {
      require_labels(type, g, 1);
      const auto& m = type == QuestionType::kPredictCrashEgoStill ? ctx.settings.crash.ego_still
                                                                  : ctx.settings.crash.ego_dynamic;
      if (m[0] == Motion::kReplay || m[1] == Motion::kReplay) require_remaining(type, ctx);
      singles();
      break;
    }
    case QuestionType::kOrderLeftmost:
    case QuestionType::kOrderRightmost:
    case QuestionType::kOrderClosest:
    case QuestionType::kOrderFrontmost:
    case QuestionType::kOrderBackmost: {
      require_labels(type, g, 3);
      const Extreme e = extreme_of(type);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
          for (std::size_t k = j + 1; k < labels.size(); ++k) {
            const double a = extreme_key(g.node(labels[i]), e);
            const double b = extreme_key(g.node(labels[j]), e);
            const double c = extreme_key(g.node(labels[k]), e);
            if (std::abs(a - b) > kTieEps && std::abs(a - c) > kTieEps && std::abs(b - c) > kTieEps) {
              out.push_back({{labels[i], labels[j], labels[k]}, {}, {}});
            }
          }
        }
      }
      if (out.empty()) throw Unsupported(type, "every triple has a tie");
      break;
    }
    case QuestionType::kEmbodiedDistance:
      actions_durations({});
      break;
    case QuestionType::kEmbodiedSideness: {
      actions_durations({});
      std::erase_if(out, [&](const BoundParams& p) {
        const auto traj = ego_rollout(ctx, p);
        return distance(traj.front().pose.position, traj.back().pose.position) <
               ctx.settings.sideness_min_travel_m;
      });
      if (out.empty()) throw Unsupported(type, "ego barely moves under every action");
      break;
    }
    case QuestionType::kEmbodiedCollision:
      require_labels(type, g, 1);
      if (ctx.settings.crash.embodied_target == Motion::kReplay) require_remaining(type, ctx);
      for (int l : labels) actions_durations({l});
      break;
  }
  return out;
}

std::string render_question(QuestionType type, const BoundParams& p, const QaContext& ctx,
                            const QuestionTemplates& templates) {
  std::string text = templates.bodies.at(type);
  auto replace_all = [&](std::string_view token, const std::string& value) {
    for (std::size_t pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
      text.replace(pos, token.size(), value);
    }
  };
  static constexpr std::array<std::string_view, 3> kIdTokens = {"<id1>", "<id2>", "<id3>"};
  for (std::size_t i = 0; i < p.ids.size() && i < kIdTokens.size(); ++i) {
    replace_all(kIdTokens[i], label_text(p.ids[i]));
  }
  if (p.action) replace_all("<action>", action_phrase(*p.action));
  if (p.duration_s) replace_all("<duration>", duration_phrase(*p.duration_s));
  replace_all("<speed>", speed_phrase(ctx.graph.ego.speed));
  if (has_unresolved_placeholder(text)) {
    throw TemplateError("unresolved placeholder in " + std::string(to_string(type)) + ": " + text);
  }
  return text;
}

Question instantiate(QuestionType type, const QaContext& ctx, Rng& rng, const QuestionTemplates& templates) {
  auto bindings = candidate_bindings(type, ctx);
  BoundParams p = bindings[rng.index(bindings.size())];
  return {type, p, render_question(type, p, ctx, templates)};
}

// ---------------------------------------------------------------------------

Answer answer_query(QuestionType type, const BoundParams& p, const QaContext& ctx) {
  const SceneGraph& g = ctx.graph;
  const SpatialVocab& vocab = ctx.settings.vocab;
  auto id = [&](std::size_t i) {
    if (i >= p.ids.size()) throw Unsupported(type, "missing <id" + std::to_string(i + 1) + ">");
    g.node(p.ids[i]);
    return p.ids[i];
  };
  auto obj = [](int l) { return "Object " + label_text(l); };

  switch (type) {
    case QuestionType::kIdentifyDistance: {
      const auto& n = g.node(id(0));
      const auto& w = vocab.distance_word(n.distance);
      return {w, obj(n.label) + " is " + meters(n.distance) + " from us, which counts as " + w + "."};
    }
    case QuestionType::kIdentifyPosition: {
      const Sector s = position_sector(g, id(0));
      return {std::string(to_string(s)), obj(p.ids[0]) + " lies in our " + std::string(to_string(s)) + " sector."};
    }
    case QuestionType::kIdentifyHeading: {
      const Sector s = heading_sector(g, id(0));
      return {std::string(to_string(s)),
              obj(p.ids[0]) + " points toward our " + std::string(to_string(s)) + " direction."};
    }
    case QuestionType::kIdentifyColor: {
      const auto& n = g.node(id(0));
      if (!n.color) throw Unsupported(type, "object has no color");
      const std::string c(to_string(*n.color));
      return {c, obj(n.label) + " is " + c + "."};
    }
    case QuestionType::kIdentifyType: {
      const auto& n = g.node(id(0));
      const std::string k(kind_phrase(n.kind));
      return {k, obj(n.label) + " is a " + k + "."};
    }
    case QuestionType::kIdentifyLeftmost:
    case QuestionType::kIdentifyRightmost:
    case QuestionType::kIdentifyClosest:
    case QuestionType::kIdentifyFrontmost:
    case QuestionType::kIdentifyBackmost: {
      const Extreme e = extreme_of(type);
      const int l = extreme_label(g, e);
      return {label_text(l), obj(l) + " is the " + std::string(to_string(e)) + " labeled object, at " +
                                 where(g.node(l), vocab) + "."};
    }
    case QuestionType::kRelativeDistance: {
      const double d = relative_distance(g, id(0), id(1));
      const auto& w = vocab.distance_word(d);
      return {w, obj(p.ids[0]) + " and object " + label_text(p.ids[1]) + " are " + meters(d) +
                     " apart, which counts as " + w + "."};
    }
    case QuestionType::kRelativePosition: {
      const auto e = relative_position(g, id(1), id(0));
      if (!e) throw Unsupported(type, "the two boxes overlap on both axes");
      const std::string ph(edge_phrase(*e));
      return {ph, obj(p.ids[0]) + " is " + ph + " object " + label_text(p.ids[1]) + "."};
    }
    case QuestionType::kRelativeHeading: {
      const auto& a = g.node(id(0));
      const auto& b = g.node(id(1));
      const double ang = std::abs(rad_to_deg(std::atan2(cross(a.heading, b.heading), dot(a.heading, b.heading))));
      const bool same = same_heading(g, a.label, b.label, vocab);
      return yes_no(same, "Their headings differ by " + fmt("%.0f", ang) + " degrees, " +
                              (same ? "within" : "beyond") + " the " + fmt("%.0f", vocab.same_heading_deg) +
                              " degree tolerance.");
    }
    case QuestionType::kRelativePredictCrashStill:
    case QuestionType::kRelativePredictCrashDynamic: {
      const auto& m = type == QuestionType::kRelativePredictCrashStill ? ctx.settings.crash.relative_still
                                                                       : ctx.settings.crash.relative_dynamic;
      const auto r = pair_crash(ctx, id(0), m[0], id(1), m[1]);
      return yes_no(r.first_step.has_value(), crash_reasoning(r, "Their"));
    }
    case QuestionType::kPredictCrashEgoStill:
    case QuestionType::kPredictCrashEgoDynamic: {
      const auto& m = type == QuestionType::kPredictCrashEgoStill ? ctx.settings.crash.ego_still
                                                                  : ctx.settings.crash.ego_dynamic;
      const auto r = pair_crash(ctx, id(0), m[0], kEgoLabel, m[1]);
      return yes_no(r.first_step.has_value(), crash_reasoning(r, "Our and its"));
    }
    case QuestionType::kPickCloser: {
      const int a = id(0), b = id(1);
      const int l = order_by(g, Extreme::kClosest, {a, b}).front();
      const int o = l == a ? b : a;
      return {label_text(l), obj(l) + " is " + meters(g.node(l).distance) + " away while object " + label_text(o) +
                                 " is " + meters(g.node(o).distance) + " away."};
    }
    case QuestionType::kOrderLeftmost:
    case QuestionType::kOrderRightmost:
    case QuestionType::kOrderClosest:
    case QuestionType::kOrderFrontmost:
    case QuestionType::kOrderBackmost: {
      const Extreme e = extreme_of(type);
      const auto ord = order_by(g, e, {id(0), id(1), id(2)});
      std::string why = "From the " + std::string(to_string(e)) + ": ";
      for (std::size_t i = 0; i < ord.size(); ++i) {
        if (i) why += ", then ";
        why += label_text(ord[i]) + " (" + where(g.node(ord[i]), vocab) + ")";
      }
      return {join_labels(ord), why + "."};
    }
    case QuestionType::kDescribeSector: {
      const auto text = render_grouping(sector_grouping(g));
      return {text, "Grouping every labeled object by the sector it occupies gives " + text + "."};
    }
    case QuestionType::kDescribeDistance: {
      const auto text = render_grouping(distance_grouping(g, vocab));
      return {text, "Grouping every labeled object by its distance from us gives " + text + "."};
    }
    case QuestionType::kDescribeScenario: {
      const auto text = render_entries(scene_entries(ctx));
      return {text, "The labeled objects are " + text + "."};
    }
    case QuestionType::kEmbodiedDistance: {
      if (!p.action || !p.duration_s) throw Unsupported(type, "missing action or duration");
      const auto traj = ego_rollout(ctx, p);
      const double d = distance(traj.front().pose.position, traj.back().pose.position);
      const auto& w = vocab.distance_word(d);
      return {w, "Simulating the maneuver moves us " + meters(d) + ", which counts as " + w + "."};
    }
    case QuestionType::kEmbodiedSideness: {
      if (!p.action || !p.duration_s) throw Unsupported(type, "missing action or duration");
      const auto traj = ego_rollout(ctx, p);
      const double d = distance(traj.front().pose.position, traj.back().pose.position);
      if (d < ctx.settings.sideness_min_travel_m) throw Unsupported(type, "ego barely moves");
      const Vec2 local = to_ego_frame(traj.front().pose, traj.back().pose.position);
      const auto w = side_word(ctx, traj);
      return {w, "Simulating the maneuver ends " + meters(local.x) + " ahead and " + meters(std::abs(local.y)) +
                     (local.y >= 0.0 ? " to the left" : " to the right") + ", which counts as " + w + "."};
    }
    case QuestionType::kEmbodiedCollision: {
      if (!p.action || !p.duration_s) throw Unsupported(type, "missing action or duration");
      const int target = id(0);
      const auto traj = ego_rollout(ctx, p);
      const Motion tm = ctx.settings.crash.embodied_target;
      int window = std::min(static_cast<int>(traj.size()) - 1, steps_for(ctx.settings.crash_horizon_s));
      if (tm == Motion::kReplay) window = std::min(window, remaining_steps(ctx));
      const Vec2 half = ctx.scenario.ego().states.front().half_extents;
      CrashResult r;
      r.window = window;
      for (int k = 0; k <= window; ++k) {
        const auto& s = traj[static_cast<std::size_t>(k)];
        const OrientedBox ego_box{s.pose.position, s.pose.heading, half};
        auto tb = box_at(ctx, target, tm, k);
        if (tb && obb_overlap(ego_box, *tb)) {
          r.first_step = k;
          break;
        }
      }
      return yes_no(r.first_step.has_value(), crash_reasoning(r, "Our and its"));
    }
    case QuestionType::kGrounding: {
      const int l = id(0);
      return {label_text(l), "The highlighted box encloses object " + label_text(l) + "."};
    }
  }
  throw Unsupported(type, "unhandled type");
}

// ---------------------------------------------------------------------------

std::vector<std::string> gen_distractors(QuestionType type, const BoundParams& p, const Answer& truth,
                                         const QaContext& ctx, Rng& rng) {
  const SceneGraph& g = ctx.graph;
  const SpatialVocab& vocab = ctx.settings.vocab;
  const std::string& t = truth.text;

  if (is_yes_no(type)) return {std::string(t == kYes ? kNo : kYes)};

  switch (type) {
    case QuestionType::kIdentifyDistance:
    case QuestionType::kRelativeDistance:
    case QuestionType::kEmbodiedDistance:
      return pick(distance_tiers(vocab, t), t, rng);
    case QuestionType::kIdentifyPosition: {
      const Sector s = *parse_sector(t);
      std::vector<Sector> near{sector_shift(s, -1), sector_shift(s, 1)}, rest;
      for (int d = 2; d <= 6; ++d) rest.push_back(sector_shift(s, d));
      return pick({sector_words(near), sector_words(rest)}, t, rng);
    }
    case QuestionType::kIdentifyHeading: {
      const Sector s = *parse_sector(t);
      std::vector<Sector> far;
      for (int i = 0; i < kSectorCount; ++i) {
        const auto c = static_cast<Sector>(i);
        if (sector_separation_deg(s, c) >= vocab.heading_distractor_min_deg) far.push_back(c);
      }
      return pick({sector_words(far)}, t, rng);
    }
    case QuestionType::kIdentifyColor: {
      std::vector<std::string> present, rest;
      for (const auto& [l, n] : g.nodes) {
        if (n.color) present.emplace_back(to_string(*n.color));
      }
      for (std::size_t i = 0; i < kObjectColorCount; ++i) rest.emplace_back(to_string(static_cast<ObjectColor>(i)));
      return pick({present, rest}, t, rng);
    }
    case QuestionType::kIdentifyType: {
      std::vector<std::string> present, rest;
      for (const auto& [l, n] : g.nodes) present.emplace_back(kind_phrase(n.kind));
      for (std::size_t i = 0; i < kObjectKindCount; ++i) rest.emplace_back(kind_phrase(static_cast<ObjectKind>(i)));
      return pick({present, rest}, t, rng);
    }
    case QuestionType::kIdentifyLeftmost:
    case QuestionType::kIdentifyRightmost:
    case QuestionType::kIdentifyClosest:
    case QuestionType::kIdentifyFrontmost:
    case QuestionType::kIdentifyBackmost:
    case QuestionType::kGrounding:
      return pick({other_labels(g)}, t, rng);
    case QuestionType::kPickCloser: {
      std::vector<std::string> ids;
      for (int l : p.ids) ids.push_back(label_text(l));
      return pick({ids}, t, rng);
    }
    case QuestionType::kRelativePosition: {
      const SpatialEdge truth_edge = [&] {
        for (auto e : kAllEdges) {
          if (edge_phrase(e) == t) return e;
        }
        throw Unsupported(type, "unknown edge phrase");
      }();
      std::vector<std::string> mirrored{std::string(edge_phrase(mirror(truth_edge)))}, rest;
      for (auto e : kAllEdges) rest.emplace_back(edge_phrase(e));
      return pick({mirrored, rest}, t, rng);
    }
    case QuestionType::kOrderLeftmost:
    case QuestionType::kOrderRightmost:
    case QuestionType::kOrderClosest:
    case QuestionType::kOrderFrontmost:
    case QuestionType::kOrderBackmost: {
      std::vector<int> perm = p.ids;
      std::sort(perm.begin(), perm.end());
      std::vector<std::string> perms;
      do {
        perms.push_back(join_labels(perm));
      } while (std::next_permutation(perm.begin(), perm.end()));
      return pick({perms}, t, rng);
    }
    case QuestionType::kDescribeSector:
      return pick({grouping_perturbations(sector_grouping(g), true)}, t, rng);
    case QuestionType::kDescribeDistance:
      return pick({grouping_perturbations(distance_grouping(g, vocab), false)}, t, rng);
    case QuestionType::kDescribeScenario: {
      const auto entries = scene_entries(ctx);
      std::vector<std::string> cands;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        auto removed = entries;
        removed.erase(removed.begin() + static_cast<std::ptrdiff_t>(i));
        cands.push_back(render_entries(removed));
      }
      // Additions invent one extra object using kinds already in the scene.
      const int extra = g.nodes.rbegin()->first + 1;
      for (int k = 0; k < 3; ++k) {
        const auto& src = std::next(g.nodes.begin(), static_cast<std::ptrdiff_t>(rng.index(g.nodes.size())))->second;
        const auto s = static_cast<Sector>(rng.index(kSectorCount));
        const auto& w = vocab.distance_words[rng.index(vocab.distance_words.size())];
        auto added = entries;
        added.push_back({extra, describe_object(src.color, src.kind, s, w)});
        cands.push_back(render_entries(added));
      }
      return pick({cands}, t, rng);
    }
    case QuestionType::kEmbodiedSideness: {
      std::vector<std::string> words(kSideWords.begin(), kSideWords.end());
      return pick({words}, t, rng);
    }
    default:
      break;
  }
  throw InsufficientCandidates("no distractor rule for " + std::string(to_string(type)));
}

// ---------------------------------------------------------------------------

QARecord format_mcq(const Question& q, const Answer& truth, const std::vector<std::string>& distractors, Rng& rng,
                    const QuestionTemplates& templates) {
  QARecord rec;
  rec.type = q.type;
  rec.params = q.params;

  std::vector<std::string> texts;
  if (is_yes_no(q.type)) {
    texts = {std::string(kYes), std::string(kNo)};
  } else {
    texts.push_back(truth.text);
    texts.insert(texts.end(), distractors.begin(), distractors.end());
    rng.shuffle(texts);
  }

  std::string prompt = q.text + "\n" + templates.choices_prefix + "\n";
  std::string letters;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const char letter = static_cast<char>('A' + i);
    rec.options.push_back({letter, texts[i]});
    if (texts[i] == truth.text) rec.answer = letter;
    prompt += std::string("(") + letter + ") " + texts[i] + "\n";
    if (i) letters += ", ";
    letters += letter;
  }
  prompt += templates.answer_instruction + " " + letters + ".";
  rec.question = std::move(prompt);
  rec.explanation = truth.reasoning + " The answer is (" + std::string(1, rec.answer) + ") " + truth.text + ".";
  return rec;
}

bool has_unresolved_placeholder(std::string_view text) {
  static const std::regex kPlaceholder(R"(<[A-Za-z_][A-Za-z0-9_\-]*>)");
  return std::regex_search(text.begin(), text.end(), kPlaceholder);
}

std::string QARecord::to_json_line() const {
  Json j;
  j["id"] = id;
  j["type"] = std::string(to_string(type));
  j["question"] = question;
  Json opts = Json::array();
  for (const auto& o : options) opts.push_back({{"letter", std::string(1, o.letter)}, {"text", o.text}});
  j["options"] = std::move(opts);
  j["answer"] = std::string(1, answer);
  j["explanation"] = explanation;
  j["image_ref"] = image_ref;
  j["frame_ref"] = {{"scenario", scenario_id}, {"step", step}};
  j["domain"] = std::string(to_string(domain));
  j["split"] = split;
  Json pj;
  pj["ids"] = params.ids;
  if (params.action) pj["action"] = *params.action;
  if (params.duration_s) pj["duration_s"] = *params.duration_s;
  j["params"] = std::move(pj);
  return j.dump();
}

QARecord QARecord::from_json_line(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  QARecord r;
  auto field = [&](const char* name) -> const Json& {
    if (!j.contains(name)) throw SchemaError(std::string("$.") + name, "missing");
    return j.at(name);
  };
  try {
    r.id = field("id").get<std::string>();
    const auto type = parse_question_type(field("type").get<std::string>());
    if (!type) throw SchemaError("$.type", "unknown question type");
    r.type = *type;
    r.question = field("question").get<std::string>();
    for (const auto& o : field("options")) {
      const auto letter = o.at("letter").get<std::string>();
      if (letter.size() != 1) throw SchemaError("$.options", "letter must be one character");
      r.options.push_back({letter.front(), o.at("text").get<std::string>()});
    }
    const auto answer = field("answer").get<std::string>();
    if (answer.size() != 1) throw SchemaError("$.answer", "must be one character");
    r.answer = answer.front();
    r.explanation = j.value("explanation", "");
    r.image_ref = j.value("image_ref", "");
    const auto& fr = field("frame_ref");
    r.scenario_id = fr.at("scenario").get<std::string>();
    r.step = fr.at("step").get<int>();
    const auto domain = parse_source_tag(field("domain").get<std::string>());
    if (!domain) throw SchemaError("$.domain", "unknown domain");
    r.domain = *domain;
    r.split = j.value("split", "");
    if (j.contains("params")) {
      const auto& pj = j.at("params");
      r.params.ids = pj.value("ids", std::vector<int>{});
      if (pj.contains("action")) r.params.action = pj.at("action").get<std::string>();
      if (pj.contains("duration_s")) r.params.duration_s = pj.at("duration_s").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("$", e.what());
  }
  return r;
}

std::optional<std::string> audit_record(const QARecord& rec, const QaContext& ctx) {
  if (rec.options.size() < 2 || rec.options.size() > 4) return "option count outside 2..4";
  std::set<std::string> texts;
  for (std::size_t i = 0; i < rec.options.size(); ++i) {
    if (rec.options[i].letter != static_cast<char>('A' + i)) return "letters are not consecutive from A";
    if (!texts.insert(rec.options[i].text).second) return "duplicate option text";
  }
  if (has_unresolved_placeholder(rec.question)) return "unresolved placeholder";
  Answer truth;
  try {
    truth = answer_query(rec.type, rec.params, ctx);
  } catch (const std::exception& e) {
    return std::string("answer replay failed: ") + e.what();
  }
  int correct = 0;
  char letter = 0;
  for (const auto& o : rec.options) {
    if (o.text == truth.text) {
      ++correct;
      letter = o.letter;
    }
  }
  if (correct != 1) return "expected exactly one correct option, found " + std::to_string(correct);
  if (letter != rec.answer) return "recorded answer letter disagrees with the replayed truth";
  return std::nullopt;
}

}  // namespace scenevqa
