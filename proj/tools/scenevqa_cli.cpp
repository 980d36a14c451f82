#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "scenevqa/config.hpp"
#include "scenevqa/dataset.hpp"
#include "scenevqa/harness.hpp"
#include "scenevqa/scoring.hpp"
#include "scenevqa/synth.hpp"

namespace fs = std::filesystem;
using namespace scenevqa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON run configuration");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--jobs", c.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--out", c.out, "output directory");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig::parse("{}") : RunConfig::load(c.config_path);
  if (c.seed) cfg.seed = c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a seed is required: pass --seed or set \"seed\" in the config");
  return *cfg.seed;
}

fs::path require_out(const RunConfig& cfg) {
  if (!cfg.out_dir) throw ConfigError("an output directory is required: pass --out or set paths.out");
  return *cfg.out_dir;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw IoError("cannot open " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// ---------------------------------------------------------------------------

int cmd_generate(const Common& c, const std::string& scenarios_arg, std::optional<int> quota) {
  RunConfig cfg = load_config(c);
  if (!scenarios_arg.empty()) cfg.scenario_dir = scenarios_arg;
  if (!cfg.scenario_dir) throw ConfigError("a scenario directory is required: pass --scenarios or set paths.scenarios");
  DatasetConfig dc = cfg.dataset;
  dc.seed = require_seed(cfg);
  dc.jobs = cfg.jobs;
  if (quota) dc.default_quota = *quota;
  const fs::path out = require_out(cfg);
  const auto scenarios = load_scenario_dir(*cfg.scenario_dir);

  const Dataset ds = generate_dataset(scenarios, dc);
  write_dataset(ds, scenarios, dc, out);
  std::printf("%zu records from %zu scenarios written to %s\n", ds.records.size(), ds.scenario_count,
              out.string().c_str());
  for (const auto& s : ds.shortfalls) {
    std::printf("  short: %-32s %d/%d\n", std::string(to_string(s.type)).c_str(), s.emitted, s.requested);
  }
  return kExitOk;
}

int cmd_annotate(const Common& c, const std::string& scenario_path, int step, std::optional<int> highlight,
                 bool closed_loop) {
  const RunConfig cfg = load_config(c);
  const fs::path out = require_out(cfg);
  const ScenarioRecord s = load_scenario(scenario_path);
  const CameraRig camera = closed_loop ? cfg.harness.camera : cfg.dataset.camera;
  const AnnotatedFrame af = annotate_scenario_frame(s, step, camera, cfg.dataset.policy);
  if (highlight && !af.annotation.labels.track_of.count(*highlight)) {
    throw ConfigError("label " + std::to_string(*highlight) + " is not visible at step " + std::to_string(step));
  }
  RenderOptions opts;
  opts.highlight_label = highlight;
  const auto rendered = render_frame(af.frame, s.drivable, camera, af.annotation, opts);

  char tag[32];
  std::snprintf(tag, sizeof tag, "_%04d", step);
  const std::string stem = s.id + tag;
  write_file(out / (stem + ".png"), std::string(rendered.png.begin(), rendered.png.end()));
  write_file(out / (stem + ".plan.json"), rendered.plan.to_json() + "\n");
  write_file(out / (stem + ".graph.json"), af.graph.to_json() + "\n");
  std::printf("%zu labelled objects; wrote %s.{png,plan.json,graph.json}\n", af.annotation.visible.size(),
              (out / stem).string().c_str());
  return kExitOk;
}

int cmd_score(const Common& c, const std::string& qa_path, const std::string& responses_path) {
  const auto records = read_qa_jsonl(qa_path);
  const auto responses = read_responses(responses_path);
  const ScoreReport rep = score_responses(records, responses);
  std::cout << rep.to_table();
  if (!rep.missing_ids.empty()) std::cerr << rep.missing_ids.size() << " records had no response\n";
  if (!c.out.empty()) write_file(fs::path(c.out) / "score.json", rep.to_json());
  return kExitOk;
}

int cmd_drive(const Common& c, const std::string& scenarios_arg, const std::string& agent_arg, bool suite,
              bool save_observations) {
  RunConfig cfg = load_config(c);
  if (!scenarios_arg.empty()) cfg.scenario_dir = scenarios_arg;
  if (!agent_arg.empty()) cfg.agent = agent_arg;
  const std::uint64_t seed = require_seed(cfg);
  AgentSpec spec;
  try {
    spec = AgentSpec::parse(cfg.agent);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::vector<ScenarioRecord> scenarios;
  if (suite) {
    scenarios = synth_suite();
  } else {
    if (!cfg.scenario_dir) throw ConfigError("pass --scenarios DIR, --suite, or set paths.scenarios");
    scenarios = load_scenario_dir(*cfg.scenario_dir);
  }
  HarnessConfig hc = cfg.harness;
  if (save_observations) hc.run_dir = require_out(cfg);

  const auto results = run_suite(scenarios, spec, seed, hc, cfg.jobs, cfg.remote);
  std::string lines;
  std::size_t aborted = 0;
  for (const auto& r : results) {
    lines += r.to_json_line() + "\n";
    if (r.aborted()) {
      ++aborted;
      std::cerr << "episode " << r.scenario_id << " aborted: " << r.error << "\n";
    }
  }
  std::optional<MetricsReport> report;
  try {
    report = compute_metrics(results);
  } catch (const EmptyInput& e) {
    std::cerr << e.what() << "\n";
  }
  if (cfg.out_dir) {
    write_file(*cfg.out_dir / "episodes.jsonl", lines);
    if (report) write_file(*cfg.out_dir / "metrics.json", report->to_json());
  }
  if (report) std::cout << report->to_table();
  return aborted ? kExitRuntime : kExitOk;
}

int cmd_reconstruct(const Common& c, const std::string& scenario_path) {
  const RunConfig cfg = load_config(c);
  const ScenarioRecord s = load_scenario(scenario_path);
  std::vector<EgoState> log;
  for (const auto& st : s.ego().states) log.push_back({st.pose, st.speed});
  const Reconstruction rec = reconstruct_actions(log, cfg.dataset.qa.catalog, cfg.dataset.qa.vehicle);

  nlohmann::ordered_json j;
  j["scenario"] = s.id;
  j["actions"] = rec.actions;
  j["mean_deviation"] = rec.mean_deviation;
  j["max_deviation"] = rec.max_deviation;
  j["step_deviation"] = rec.step_deviation;
  for (std::size_t i = 0; i < rec.actions.size(); ++i) {
    std::printf("%4zu  %s\n", i * kStepsPerDecision, rec.actions[i].c_str());
  }
  std::printf("decisions %zu  mean deviation %.6f m  max deviation %.6f m\n", rec.actions.size(), rec.mean_deviation,
              rec.max_deviation);
  if (cfg.out_dir) write_file(*cfg.out_dir / (s.id + ".actions.json"), j.dump(2) + "\n");
  return kExitOk;
}

int cmd_report(const Common& c, const std::string& episodes_path) {
  std::vector<EpisodeResult> results;
  for (const auto& line : read_lines(episodes_path)) results.push_back(episode_from_json_line(line));
  const MetricsReport m = compute_metrics(results);
  std::cout << m.to_table();
  if (!c.out.empty()) write_file(fs::path(c.out) / "metrics.json", m.to_json());
  return kExitOk;
}

int cmd_synth(const Common& c, std::optional<int> corpus) {
  if (c.out.empty()) throw ConfigError("--out is required");
  const auto scenarios = corpus ? synth_corpus(*corpus) : synth_suite();
  fs::create_directories(c.out);
  for (const auto& s : scenarios) save_scenario(s, fs::path(c.out) / (s.id + ".json"));
  std::printf("%zu scenarios written to %s\n", scenarios.size(), c.out.c_str());
  return kExitOk;
}

int cmd_downsample(const Common& c, const std::string& in, int factor) {
  const RunConfig cfg = load_config(c);
  const std::uint64_t seed = require_seed(cfg);
  if (c.out.empty()) throw ConfigError("--out is required");
  const auto lines = read_lines(in);
  std::string text;
  const auto kept = downsample(lines, factor, seed);
  for (const auto& l : kept) text += l + "\n";
  write_file(c.out, text);
  std::printf("%zu of %zu records kept\n", kept.size(), lines.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario VQA toolkit: dataset generation, annotation, scoring and closed-loop driving"};
  app.require_subcommand(1);

  Common gen_c, ann_c, score_c, drive_c, rec_c, rep_c, synth_c, down_c;

  auto* gen = app.add_subcommand("generate", "generate a multiple-choice QA dataset from scenario files");
  add_common(gen, gen_c);
  std::string gen_scenarios;
  std::optional<int> gen_quota;
  gen->add_option("--scenarios", gen_scenarios, "directory of scenario JSON files");
  gen->add_option("--quota", gen_quota, "records per question type")->check(CLI::NonNegativeNumber);

  auto* ann = app.add_subcommand("annotate", "render one annotated frame with its plan and scene graph");
  add_common(ann, ann_c);
  std::string ann_scenario;
  int ann_step = 0;
  std::optional<int> ann_highlight;
  bool ann_closed_loop = false;
  ann->add_option("--scenario", ann_scenario, "scenario JSON file")->required();
  ann->add_option("--step", ann_step, "frame index")->check(CLI::NonNegativeNumber);
  ann->add_option("--highlight", ann_highlight, "label to outline as in grounding questions");
  ann->add_flag("--closed-loop", ann_closed_loop, "use the closed-loop camera");

  auto* score = app.add_subcommand("score", "grade model responses against a QA file");
  add_common(score, score_c);
  std::string score_qa, score_resp;
  score->add_option("--qa", score_qa, "QA JSONL file")->required();
  score->add_option("--responses", score_resp, "responses: JSON object or JSONL of {id, response}")->required();

  auto* drive = app.add_subcommand("drive", "run closed-loop episodes");
  add_common(drive, drive_c);
  std::string drive_scenarios, drive_agent;
  bool drive_suite = false, drive_save = false;
  drive->add_option("--scenarios", drive_scenarios, "directory of scenario JSON files");
  drive->add_option("--agent", drive_agent, "random | brake | straight | remote:URL");
  drive->add_flag("--suite", drive_suite, "use the bundled ten-scenario synthetic suite");
  drive->add_flag("--save-observations", drive_save, "write observation PNGs under --out");

  auto* rec = app.add_subcommand("reconstruct", "recover a catalog action sequence from an ego log");
  add_common(rec, rec_c);
  std::string rec_scenario;
  rec->add_option("--scenario", rec_scenario, "scenario JSON file")->required();

  auto* rep = app.add_subcommand("report", "aggregate metrics from an episodes JSONL file");
  add_common(rep, rep_c);
  std::string rep_episodes;
  rep->add_option("--episodes", rep_episodes, "episodes JSONL from drive")->required();

  auto* syn = app.add_subcommand("synth", "write synthetic scenario files");
  add_common(syn, synth_c);
  std::optional<int> syn_corpus;
  syn->add_option("--corpus", syn_corpus, "seeds per layout instead of the bundled suite")->check(CLI::PositiveNumber);

  auto* down = app.add_subcommand("downsample", "keep 1/factor of a JSONL file's records");
  add_common(down, down_c);
  std::string down_in;
  int down_factor = 4;
  down->add_option("--in", down_in, "input JSONL")->required();
  down->add_option("--factor", down_factor, "downsampling factor")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_c, gen_scenarios, gen_quota);
    if (*ann) return cmd_annotate(ann_c, ann_scenario, ann_step, ann_highlight, ann_closed_loop);
    if (*score) return cmd_score(score_c, score_qa, score_resp);
    if (*drive) return cmd_drive(drive_c, drive_scenarios, drive_agent, drive_suite, drive_save);
    if (*rec) return cmd_reconstruct(rec_c, rec_scenario);
    if (*rep) return cmd_report(rep_c, rep_episodes);
    if (*syn) return cmd_synth(synth_c, syn_corpus);
    if (*down) return cmd_downsample(down_c, down_in, down_factor);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
