#include "scenevqa/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "scenevqa/parallel.hpp"
#include "scenevqa/raster.hpp"
#include "scenevqa/rng.hpp"

namespace scenevqa {

namespace {

using Json = nlohmann::ordered_json;

class FixedAgent : public Agent {
 public:
  explicit FixedAgent(std::string action) : action_(std::move(action)) {}
  std::string act(const Observation&) override { return action_; }

 private:
  std::string action_;
};

class RandomAgent : public Agent {
 public:
  RandomAgent(std::uint64_t seed, const ActionCatalog& catalog) : rng_(seed) {
    for (const auto& e : catalog.entries()) names_.push_back(e.name);
  }
  std::string act(const Observation&) override { return names_[rng_.index(names_.size())]; }

 private:
  Rng rng_;
  std::vector<std::string> names_;
};

class RemoteAgent : public Agent {
 public:
  explicit RemoteAgent(RemoteAgentOptions opts) : opts_(std::move(opts)) {
    const auto scheme_end = opts_.url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("agent URL needs a scheme: " + opts_.url);
    const auto path_start = opts_.url.find('/', scheme_end + 3);
    origin_ = opts_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : opts_.url.substr(path_start);
  }

  bool needs_image() const override { return true; }

  std::string act(const Observation& obs) override {
    Json body;
    body["image"] = httplib::detail::base64_encode(std::string(obs.png.begin(), obs.png.end()));
    body["prompt"] = obs.prompt;
    body["meta"] = {{"scenario", obs.scenario_id}, {"step", obs.step}};
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      httplib::Client cli(origin_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());
      auto res = cli.Post(path_, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      auto reply = Json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.is_object()) throw MalformedReply("reply is not a JSON object");
      if (!reply.contains("text") || !reply["text"].is_string()) throw MalformedReply("reply has no \"text\" string");
      return reply["text"].get<std::string>();
    }
    throw AgentUnreachable(opts_.url + ": " + last_error + " after " + std::to_string(opts_.retries + 1) +
                           " attempts");
  }

 private:
  RemoteAgentOptions opts_;
  std::string origin_;
  std::string path_;
};

std::string step_tag(int step) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", step);
  return buf;
}

Json vec_json(const Vec2& v) { return Json::array({v.x, v.y}); }

Json traj_json(const std::vector<Vec2>& t) {
  Json a = Json::array();
  for (const auto& p : t) a.push_back(vec_json(p));
  return a;
}

std::vector<Vec2> traj_from(const Json& j) {
  std::vector<Vec2> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------

NavCommand nav_command(const Pose2D& ego, const Vec2& destination, const SpatialVocab& vocab) {
  const Vec2 local = to_ego_frame(ego, destination);
  NavCommand nav;
  nav.distance_word = vocab.distance_word(norm(local));
  nav.position_word = std::string(to_string(sector_of(local)));
  nav.text = "your final destination is at " + nav.distance_word + " distance to " + nav.position_word +
             " at this moment.";
  return nav;
}

std::vector<McOption> action_options(const ActionCatalog& catalog) {
  std::vector<McOption> out;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    out.push_back({static_cast<char>('A' + i), catalog.entries()[i].name});
  }
  return out;
}

std::string build_prompt(const NavCommand& nav, double speed, const ActionCatalog& catalog) {
  char speed_buf[32];
  std::snprintf(speed_buf, sizeof speed_buf, "%.1f", speed);
  std::string p = "You are driving the ego vehicle; " + nav.text + " Our current speed is " + speed_buf +
                  " m/s.\nChoose the next action from the following options:\n";
  std::string letters;
  for (const auto& o : action_options(catalog)) {
    p += std::string("(") + o.letter + ") " + o.text + "\n";
    if (!letters.empty()) letters += ", ";
    letters += o.letter;
  }
  return p + "Answer with a single capitalized character chosen from " + letters + ".";
}

std::unique_ptr<Agent> baseline_agent(BaselineKind kind, std::uint64_t seed, const ActionCatalog& catalog) {
  switch (kind) {
    case BaselineKind::kRandom: return std::make_unique<RandomAgent>(seed, catalog);
    case BaselineKind::kBrake: return std::make_unique<FixedAgent>("BRAKE");
    case BaselineKind::kStraight: return std::make_unique<FixedAgent>(std::string(kKeepStraight));
  }
  return nullptr;
}

std::unique_ptr<Agent> remote_agent(const RemoteAgentOptions& opts) { return std::make_unique<RemoteAgent>(opts); }

AgentSpec AgentSpec::parse(const std::string& text) {
  if (text == "random" || text == "brake" || text == "straight") return {text, ""};
  if (text.rfind("remote:", 0) == 0 && text.size() > 7) return {"remote", text.substr(7)};
  throw std::invalid_argument("agent must be random, brake, straight or remote:URL, got '" + text + "'");
}

std::string AgentSpec::to_string() const { return kind == "remote" ? "remote:" + url : kind; }

std::unique_ptr<Agent> AgentSpec::make(std::uint64_t seed, const std::string& scenario_id,
                                       const ActionCatalog& catalog, const RemoteAgentOptions& remote_defaults) const {
  if (kind == "random") return baseline_agent(BaselineKind::kRandom, derive_seed(seed, "agent/" + scenario_id), catalog);
  if (kind == "brake") return baseline_agent(BaselineKind::kBrake, seed, catalog);
  if (kind == "straight") return baseline_agent(BaselineKind::kStraight, seed, catalog);
  RemoteAgentOptions o = remote_defaults;
  o.url = url;
  return remote_agent(o);
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kHorizon: return "horizon";
    case Termination::kOffRoad: return "off_road";
    case Termination::kAborted: return "aborted";
  }
  return "horizon";
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(const ScenarioRecord& scenario, Agent& agent, const std::string& agent_name,
                          const HarnessConfig& config) {
  EpisodeResult r;
  r.scenario_id = scenario.id;
  r.agent = agent_name;
  r.destination = scenario.destination;
  r.gt_traj = scenario.ego_positions();
  r.route_len = arc_length(r.gt_traj);

  const Track& ego_track = scenario.ego();
  const ObjectState& s0 = ego_track.states.front();
  EgoState state{s0.pose, s0.speed};
  const Vec2 half = s0.half_extents;
  const auto options = action_options(config.catalog);
  const int horizon = scenario.horizon;
  r.driven_traj.push_back(state.pose.position);

  auto check_collision = [&](int step) {
    if (r.collided) return;
    const OrientedBox ego_box{state.pose.position, state.pose.heading, half};
    for (const auto& t : scenario.tracks) {
      if (t.id == scenario.ego_id) continue;
      const auto& st = t.states[static_cast<std::size_t>(step)];
      if (st.valid && obb_overlap(ego_box, st.box())) {
        r.collided = true;
        r.first_collision_step = step;
        return;
      }
    }
  };
  check_collision(0);

  const bool render = agent.needs_image() || config.always_render || config.run_dir.has_value();
  for (int t = 0; t < horizon; t += kStepsPerDecision) {
    DecisionLog d;
    d.step = t;
    d.ego = state;

    Observation obs;
    obs.scenario_id = scenario.id;
    obs.step = t;
    obs.prompt = build_prompt(nav_command(state.pose, scenario.destination, config.vocab), state.speed, config.catalog);
    if (render) {
      // The observed frame shows replayed traffic around the driven ego pose.
      FrameSnapshot frame = frame_at(scenario, t);
      frame.ego.state.pose = state.pose;
      frame.ego.state.speed = state.speed;
      const auto annot = annotate_frame(frame, config.camera, config.policy);
      obs.png = render_frame(frame, scenario.drivable, config.camera, annot).png;
      if (config.run_dir) {
        d.observation_ref = "observations/" + scenario.id + "_" + step_tag(t) + ".png";
        const auto path = *config.run_dir / d.observation_ref;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        f.write(reinterpret_cast<const char*>(obs.png.data()), static_cast<std::streamsize>(obs.png.size()));
      }
    }

    try {
      d.raw_response = agent.act(obs);
    } catch (const std::exception& e) {
      r.termination = Termination::kAborted;
      r.error = e.what();
      break;
    }
    const auto parsed = parse_response(d.raw_response, options);
    d.parse_failed = !parsed.ok();
    d.action = d.parse_failed ? std::string(kKeepStraight)
                              : config.catalog.entries()[static_cast<std::size_t>(*parsed.letter - 'A')].name;
    r.decisions.push_back(d);

    const ControlSignal c = map_action(config.catalog.at(d.action), config.vehicle);
    const int n = std::min(kStepsPerDecision, horizon - 1 - t);
    bool off_road = false;
    for (int k = 1; k <= n; ++k) {
      state = step(state, c, config.vehicle);
      r.driven_traj.push_back(state.pose.position);
      check_collision(t + k);
      if (!scenario.on_drivable(state.pose.position)) {
        off_road = true;
        break;
      }
    }
    if (off_road) {
      r.termination = Termination::kOffRoad;
      break;
    }
  }
  r.traveled = arc_length(r.driven_traj);
  return r;
}

std::vector<EpisodeResult> run_suite(const std::vector<ScenarioRecord>& scenarios, const AgentSpec& spec,
                                     std::uint64_t seed, const HarnessConfig& config, int jobs,
                                     const RemoteAgentOptions& remote) {
  std::vector<EpisodeResult> out(scenarios.size());
  parallel_for(scenarios.size(), jobs, [&](std::size_t i) {
    auto agent = spec.make(seed, scenarios[i].id, config.catalog, remote);
    out[i] = run_episode(scenarios[i], *agent, spec.to_string(), config);
  });
  return out;
}

int EpisodeResult::parse_failures() const {
  return static_cast<int>(std::count_if(decisions.begin(), decisions.end(),
                                        [](const DecisionLog& d) { return d.parse_failed; }));
}

std::string EpisodeResult::to_json_line() const {
  Json j;
  j["scenario"] = scenario_id;
  j["agent"] = agent;
  j["termination"] = std::string(to_string(termination));
  j["collided"] = collided;
  j["first_collision_step"] = first_collision_step ? Json(*first_collision_step) : Json(nullptr);
  j["traveled"] = traveled;
  j["route_len"] = route_len;
  j["destination"] = vec_json(destination);
  j["error"] = error;
  Json ds = Json::array();
  for (const auto& d : decisions) {
    Json e;
    e["step"] = d.step;
    e["observation"] = d.observation_ref;
    e["response"] = d.raw_response;
    e["action"] = d.action;
    e["parse_failed"] = d.parse_failed;
    e["ego"] = {{"x", d.ego.pose.position.x}, {"y", d.ego.pose.position.y}, {"hx", d.ego.pose.heading.x},
                {"hy", d.ego.pose.heading.y}, {"speed", d.ego.speed}};
    ds.push_back(std::move(e));
  }
  j["decisions"] = std::move(ds);
  j["driven_traj"] = traj_json(driven_traj);
  j["gt_traj"] = traj_json(gt_traj);
  return j.dump();
}

EpisodeResult episode_from_json_line(const std::string& line) {
  const auto j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SchemaError("$", "episode line is not a JSON object");
  EpisodeResult r;
  try {
    r.scenario_id = j.at("scenario").get<std::string>();
    r.agent = j.at("agent").get<std::string>();
    const auto term = j.at("termination").get<std::string>();
    if (term == "horizon") r.termination = Termination::kHorizon;
    else if (term == "off_road") r.termination = Termination::kOffRoad;
    else if (term == "aborted") r.termination = Termination::kAborted;
    else throw SchemaError("$.termination", "unknown value " + term);
    r.collided = j.at("collided").get<bool>();
    if (!j.at("first_collision_step").is_null()) r.first_collision_step = j["first_collision_step"].get<int>();
    r.traveled = j.at("traveled").get<double>();
    r.route_len = j.at("route_len").get<double>();
    const auto& dst = j.at("destination");
    r.destination = {dst.at(0).get<double>(), dst.at(1).get<double>()};
    r.error = j.value("error", "");
    for (const auto& e : j.at("decisions")) {
      DecisionLog d;
      d.step = e.at("step").get<int>();
      d.observation_ref = e.value("observation", "");
      d.raw_response = e.at("response").get<std::string>();
      d.action = e.at("action").get<std::string>();
      d.parse_failed = e.at("parse_failed").get<bool>();
      const auto& eg = e.at("ego");
      d.ego.pose.position = {eg.at("x").get<double>(), eg.at("y").get<double>()};
      d.ego.pose.heading = {eg.at("hx").get<double>(), eg.at("hy").get<double>()};
      d.ego.speed = eg.at("speed").get<double>();
      r.decisions.push_back(std::move(d));
    }
    r.driven_traj = traj_from(j.at("driven_traj"));
    r.gt_traj = traj_from(j.at("gt_traj"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("$", e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------

std::vector<Vec2> pad_trajectory(std::vector<Vec2> driven, std::size_t length) {
  if (driven.empty()) throw EmptyInput("cannot pad an empty trajectory");
  if (driven.size() > length) throw std::invalid_argument("driven trajectory is longer than the reference");
  const Vec2 last = driven.back();
  driven.resize(length, last);
  return driven;
}

double average_displacement(const std::vector<Vec2>& driven, const std::vector<Vec2>& gt) {
  if (gt.empty()) throw EmptyInput("empty reference trajectory");
  const auto padded = pad_trajectory(driven, gt.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) sum += distance(padded[i], gt[i]);
  return sum / static_cast<double>(gt.size());
}

double final_displacement(const std::vector<Vec2>& driven, const Vec2& destination) {
  if (driven.empty()) throw EmptyInput("empty trajectory");
  return distance(driven.back(), destination);
}

double route_completion(double traveled, double route_len) {
  if (!(route_len > 0.0)) return 1.0;
  return std::clamp(traveled / route_len, 0.0, 1.0);
}

MetricsReport compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw EmptyInput("no episodes to score");
  MetricsReport m;
  std::vector<double> rc, ade, fde;
  std::size_t off_road = 0, collided = 0, decisions = 0, parse_fail = 0;
  for (const auto& r : results) {
    if (r.aborted()) {
      ++m.aborted;
      continue;
    }
    rc.push_back(route_completion(r.traveled, r.route_len));
    ade.push_back(average_displacement(r.driven_traj, r.gt_traj));
    fde.push_back(final_displacement(r.driven_traj, r.destination));
    off_road += r.termination == Termination::kOffRoad;
    collided += r.collided;
    decisions += r.decisions.size();
    parse_fail += static_cast<std::size_t>(r.parse_failures());
  }
  m.episodes = rc.size();
  if (m.episodes == 0) throw EmptyInput("every episode was aborted");
  const double n = static_cast<double>(m.episodes);
  m.route_completion = mean(rc);
  m.ade = mean(ade);
  m.fde = mean(fde);
  m.off_road_rate = static_cast<double>(off_road) / n;
  m.collision_rate = static_cast<double>(collided) / n;
  m.parse_fail_rate = decisions ? static_cast<double>(parse_fail) / static_cast<double>(decisions) : 0.0;
  return m;
}

std::string MetricsReport::to_json() const {
  Json j;
  j["episodes"] = episodes;
  j["aborted"] = aborted;
  j["route_completion"] = route_completion;
  j["off_road_rate"] = off_road_rate;
  j["collision_rate"] = collision_rate;
  j["ade"] = ade;
  j["fde"] = fde;
  j["parse_fail_rate"] = parse_fail_rate;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-18s %10s\n%-18s %10zu\n%-18s %10zu\n%-18s %10.4f\n%-18s %10.4f\n%-18s %10.4f\n"
                "%-18s %10.4f\n%-18s %10.4f\n%-18s %10.4f\n",
                "metric", "value", "episodes", episodes, "aborted", aborted, "route_completion", route_completion,
                "off_road_rate", off_road_rate, "collision_rate", collision_rate, "ade_m", ade, "fde_m", fde,
                "parse_fail_rate", parse_fail_rate);
  return buf;
}

}  // namespace scenevqa
