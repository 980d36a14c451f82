#include "scenevqa/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace scenevqa {

namespace {

using Json = nlohmann::json;

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (ok.count(k) == 0) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void read_camera(const Json& j, CameraRig& cam, const std::string& where) {
  only_keys(j, where, {"fov_deg", "width", "height", "mount_height", "forward_offset"});
  read(j, "fov_deg", cam.fov_deg, where);
  read(j, "width", cam.width, where);
  read(j, "height", cam.height, where);
  read(j, "mount_height", cam.mount_height, where);
  read(j, "forward_offset", cam.forward_offset, where);
}

Motion read_motion(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected \"frozen\" or \"replay\"");
  const auto s = j.get<std::string>();
  if (s == "frozen") return Motion::kFrozen;
  if (s == "replay") return Motion::kReplay;
  throw ConfigError(where + ": expected \"frozen\" or \"replay\", got '" + s + "'");
}

void read_pair(const Json& j, const char* key, std::array<Motion, 2>& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw ConfigError(where + "." + key + ": expected two motions");
  out = {read_motion(a[0], where + "." + key + "[0]"), read_motion(a[1], where + "." + key + "[1]")};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& json_text, const std::filesystem::path& base_dir) {
  Json j = Json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  only_keys(j, "$", {"paths", "seed", "jobs", "qa", "vehicle", "actions", "vocab", "visibility", "camera", "agent"});

  RunConfig c;
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    only_keys(p, "$.paths", {"scenarios", "out"});
    if (p.contains("scenarios")) c.scenario_dir = resolve(base_dir, p["scenarios"].get<std::string>());
    if (p.contains("out")) c.out_dir = resolve(base_dir, p["out"].get<std::string>());
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("$.seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  read(j, "jobs", c.jobs, "$");

  if (j.contains("vehicle")) {
    const auto& v = j["vehicle"];
    const std::string w = "$.vehicle";
    only_keys(v, w, {"s_max_deg", "f_max", "b_max", "wheelbase", "v_max", "max_accel", "max_decel", "drag"});
    auto& p = c.dataset.qa.vehicle;
    read(v, "s_max_deg", p.s_max_deg, w);
    read(v, "f_max", p.f_max, w);
    read(v, "b_max", p.b_max, w);
    read(v, "wheelbase", p.wheelbase, w);
    read(v, "v_max", p.v_max, w);
    read(v, "max_accel", p.max_accel, w);
    read(v, "max_decel", p.max_decel, w);
    read(v, "drag", p.drag, w);
  }
  if (j.contains("actions")) {
    const auto& a = j["actions"];
    if (!a.is_array()) throw ConfigError("$.actions: expected an array");
    std::vector<ActionCatalog::Entry> entries;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string w = "$.actions[" + std::to_string(i) + "]";
      only_keys(a[i], w, {"name", "a1", "a2"});
      ActionCatalog::Entry e;
      read(a[i], "name", e.name, w);
      read(a[i], "a1", e.action.a1, w);
      read(a[i], "a2", e.action.a2, w);
      entries.push_back(e);
    }
    try {
      c.dataset.qa.catalog = ActionCatalog(std::move(entries));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("$.actions: ") + e.what());
    }
  }
  if (j.contains("vocab")) {
    const auto& v = j["vocab"];
    const std::string w = "$.vocab";
    only_keys(v, w, {"distance_bounds", "distance_words", "same_heading_deg", "heading_distractor_min_deg"});
    auto& vc = c.dataset.qa.vocab;
    read(v, "distance_bounds", vc.distance_bounds, w);
    read(v, "distance_words", vc.distance_words, w);
    read(v, "same_heading_deg", vc.same_heading_deg, w);
    read(v, "heading_distractor_min_deg", vc.heading_distractor_min_deg, w);
  }
  if (j.contains("visibility")) {
    const auto& v = j["visibility"];
    const std::string w = "$.visibility";
    only_keys(v, w, {"min_visible_fraction", "min_pixels", "max_range_m"});
    read(v, "min_visible_fraction", c.dataset.policy.min_visible_fraction, w);
    read(v, "min_pixels", c.dataset.policy.min_pixels, w);
    read(v, "max_range_m", c.dataset.policy.max_range_m, w);
  }
  if (j.contains("camera")) {
    const auto& v = j["camera"];
    only_keys(v, "$.camera", {"generation", "closed_loop"});
    if (v.contains("generation")) read_camera(v["generation"], c.dataset.camera, "$.camera.generation");
    if (v.contains("closed_loop")) read_camera(v["closed_loop"], c.harness.camera, "$.camera.closed_loop");
  }
  if (j.contains("qa")) {
    const auto& q = j["qa"];
    const std::string w = "$.qa";
    only_keys(q, w, {"default_quota", "quotas", "splits", "keyframe_stride", "per_frame_type_cap", "durations_s",
                     "crash_horizon_s", "crash", "sideness_band_m", "sideness_min_travel_m"});
    auto& d = c.dataset;
    read(q, "default_quota", d.default_quota, w);
    read(q, "keyframe_stride", d.keyframe_stride, w);
    read(q, "per_frame_type_cap", d.per_frame_type_cap, w);
    read(q, "durations_s", d.qa.durations_s, w);
    read(q, "crash_horizon_s", d.qa.crash_horizon_s, w);
    read(q, "sideness_band_m", d.qa.sideness_band_m, w);
    read(q, "sideness_min_travel_m", d.qa.sideness_min_travel_m, w);
    if (q.contains("quotas")) {
      const auto& qs = q["quotas"];
      if (!qs.is_object()) throw ConfigError(w + ".quotas: expected an object");
      for (const auto& [k, v] : qs.items()) {
        const auto t = parse_question_type(k);
        if (!t) throw ConfigError(w + ".quotas: unknown question type '" + k + "'");
        if (!v.is_number_integer()) throw ConfigError(w + ".quotas." + k + ": expected an integer");
        d.quotas[*t] = v.get<int>();
      }
    }
    if (q.contains("splits")) {
      const auto& sp = q["splits"];
      if (!sp.is_array()) throw ConfigError(w + ".splits: expected an array of {name, fraction}");
      d.splits.clear();
      for (std::size_t i = 0; i < sp.size(); ++i) {
        const std::string ws = w + ".splits[" + std::to_string(i) + "]";
        only_keys(sp[i], ws, {"name", "fraction"});
        SplitSpec s;
        read(sp[i], "name", s.name, ws);
        read(sp[i], "fraction", s.fraction, ws);
        d.splits.push_back(s);
      }
    }
    if (q.contains("crash")) {
      const auto& cr = q["crash"];
      const std::string wc = w + ".crash";
      only_keys(cr, wc, {"relative_still", "relative_dynamic", "ego_still", "ego_dynamic", "embodied_target"});
      read_pair(cr, "relative_still", d.qa.crash.relative_still, wc);
      read_pair(cr, "relative_dynamic", d.qa.crash.relative_dynamic, wc);
      read_pair(cr, "ego_still", d.qa.crash.ego_still, wc);
      read_pair(cr, "ego_dynamic", d.qa.crash.ego_dynamic, wc);
      if (cr.contains("embodied_target")) d.qa.crash.embodied_target = read_motion(cr["embodied_target"], wc + ".embodied_target");
    }
  }
  if (j.contains("agent")) {
    const auto& a = j["agent"];
    const std::string w = "$.agent";
    only_keys(a, w, {"spec", "timeout_ms", "retries"});
    read(a, "spec", c.agent, w);
    int timeout_ms = static_cast<int>(c.remote.timeout.count());
    read(a, "timeout_ms", timeout_ms, w);
    c.remote.timeout = std::chrono::milliseconds(timeout_ms);
    read(a, "retries", c.remote.retries, w);
  }

  // The harness shares the module-independent sections.
  c.harness.vocab = c.dataset.qa.vocab;
  c.harness.vehicle = c.dataset.qa.vehicle;
  c.harness.catalog = c.dataset.qa.catalog;
  c.harness.policy = c.dataset.policy;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.parent_path());
}

void RunConfig::validate() const {
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (scenario_dir && !std::filesystem::is_directory(*scenario_dir)) {
    throw ConfigError("scenario directory does not exist: " + scenario_dir->string());
  }
  try {
    dataset.validate();
    harness.camera.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (remote.timeout.count() <= 0) throw ConfigError("agent.timeout_ms must be positive");
  if (remote.retries < 0) throw ConfigError("agent.retries must be >= 0");
  try {
    AgentSpec::parse(agent);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<ScenarioRecord> load_scenario_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("scenario directory does not exist: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no scenario files (*.json) in " + dir.string());
  std::vector<ScenarioRecord> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

}  // namespace scenevqa
