#include "scenevqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "scenevqa/parallel.hpp"
#include "scenevqa/rng.hpp"

namespace scenevqa {

namespace {

using Json = nlohmann::ordered_json;

std::string step_tag(int step) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", step);
  return buf;
}

std::string image_ref_for(const std::string& scenario, int step, std::optional<int> highlight) {
  std::string ref = "images/" + scenario + "_" + step_tag(step);
  if (highlight) ref += "_g" + std::to_string(*highlight);
  return ref + ".png";
}

struct ScenarioOutput {
  std::vector<QARecord> candidates;
  std::map<QuestionType, std::map<std::string, int>> skips;
};

ScenarioOutput generate_for_scenario(const ScenarioRecord& s, const DatasetConfig& cfg) {
  ScenarioOutput out;
  const std::string split = assign_split(s.id, cfg.seed, cfg.splits);
  for (int step = 0; step < s.horizon; step += cfg.keyframe_stride) {
    const AnnotatedFrame af = annotate_scenario_frame(s, step, cfg.camera, cfg.policy);
    const QaContext ctx{s, af.graph, cfg.qa};
    for (QuestionType type : all_question_types()) {
      if (cfg.quota_for(type) <= 0) continue;
      auto& reasons = out.skips[type];
      if (is_train_only(type) && split != "train") {
        ++reasons["train-only type outside the train split"];
        continue;
      }
      Rng rng(derive_seed(cfg.seed, s.id + "/" + std::to_string(step) + "/" + std::string(to_string(type))));
      std::vector<BoundParams> bindings;
      try {
        bindings = candidate_bindings(type, ctx);
      } catch (const Unsupported& e) {
        ++reasons[e.reason()];
        continue;
      }
      rng.shuffle(bindings);
      int emitted = 0;
      for (const auto& params : bindings) {
        if (emitted == cfg.per_frame_type_cap) break;
        try {
          const Answer truth = answer_query(type, params, ctx);
          const auto distractors = gen_distractors(type, params, truth, ctx, rng);
          const Question q{type, params, render_question(type, params, ctx)};
          QARecord rec = format_mcq(q, truth, distractors, rng);
          rec.id = s.id + "_" + step_tag(step) + "_" + std::string(to_string(type)) + "_" + std::to_string(emitted);
          rec.scenario_id = s.id;
          rec.step = step;
          rec.domain = s.source_tag;
          rec.split = split;
          rec.image_ref = image_ref_for(
              s.id, step, type == QuestionType::kGrounding ? std::optional<int>(params.ids.at(0)) : std::nullopt);
          out.candidates.push_back(std::move(rec));
          ++emitted;
        } catch (const Unsupported& e) {
          ++reasons[e.reason()];
        } catch (const InsufficientCandidates&) {
          ++reasons["insufficient distractor candidates"];
        }
      }
    }
  }
  for (auto it = out.skips.begin(); it != out.skips.end();) {
    it = it->second.empty() ? out.skips.erase(it) : std::next(it);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace

AnnotatedFrame annotate_scenario_frame(const ScenarioRecord& s, int step, const CameraRig& camera,
                                       const VisibilityPolicy& policy) {
  AnnotatedFrame af;
  af.frame = frame_at(s, step);
  af.annotation = annotate_frame(af.frame, camera, policy);
  af.graph = build_scene_graph(af.frame, policy, af.annotation.labels);
  return af;
}

int DatasetConfig::quota_for(QuestionType t) const {
  auto it = quotas.find(t);
  return it == quotas.end() ? default_quota : it->second;
}

void DatasetConfig::validate() const {
  if (default_quota < 0) throw InvariantError("default_quota must be non-negative");
  for (const auto& [t, q] : quotas) {
    if (q < 0) throw InvariantError("quota for " + std::string(to_string(t)) + " must be non-negative");
  }
  if (splits.empty()) throw InvariantError("at least one split is required");
  double total = 0.0;
  std::set<std::string> names;
  for (const auto& sp : splits) {
    if (sp.name.empty() || !names.insert(sp.name).second) throw InvariantError("split names must be unique");
    if (!(sp.fraction > 0.0)) throw InvariantError("split fractions must be positive");
    total += sp.fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvariantError("split fractions must sum to 1");
  if (keyframe_stride < 1) throw InvariantError("keyframe_stride must be >= 1");
  if (per_frame_type_cap < 1) throw InvariantError("per_frame_type_cap must be >= 1");
  camera.validate();
  qa.validate();
}

std::string assign_split(const std::string& scenario_id, std::uint64_t seed, const std::vector<SplitSpec>& splits) {
  Rng rng(derive_seed(seed, "split/" + scenario_id));
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& sp : splits) {
    acc += sp.fraction;
    if (u < acc) return sp.name;
  }
  return splits.back().name;
}

Dataset generate_dataset(std::vector<ScenarioRecord> scenarios, const DatasetConfig& config) {
  config.validate();
  std::sort(scenarios.begin(), scenarios.end(),
            [](const ScenarioRecord& a, const ScenarioRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < scenarios.size(); ++i) {
    if (scenarios[i].id == scenarios[i - 1].id) throw InvariantError("duplicate scenario id " + scenarios[i].id);
  }

  std::vector<ScenarioOutput> outputs(scenarios.size());
  parallel_for(scenarios.size(), config.jobs,
               [&](std::size_t i) { outputs[i] = generate_for_scenario(scenarios[i], config); });

  Dataset ds;
  ds.seed = config.seed;
  ds.scenario_count = scenarios.size();

  // Candidate positions in generation order, pooled per type.
  std::vector<std::pair<std::size_t, std::size_t>> order;
  std::map<QuestionType, std::vector<std::size_t>> pools;
  for (std::size_t si = 0; si < outputs.size(); ++si) {
    for (std::size_t ci = 0; ci < outputs[si].candidates.size(); ++ci) {
      pools[outputs[si].candidates[ci].type].push_back(order.size());
      order.emplace_back(si, ci);
    }
    for (const auto& [t, reasons] : outputs[si].skips) {
      for (const auto& [r, n] : reasons) ds.skips[t][r] += n;
    }
  }

  std::vector<bool> keep(order.size(), false);
  for (QuestionType t : all_question_types()) {
    const int quota = config.quota_for(t);
    auto& pool = pools[t];
    Rng rng(derive_seed(config.seed, "quota/" + std::string(to_string(t))));
    rng.shuffle(pool);
    const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(quota));
    for (std::size_t k = 0; k < take; ++k) keep[pool[k]] = true;
    if (take < static_cast<std::size_t>(quota)) ds.shortfalls.push_back({t, quota, static_cast<int>(take)});
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (keep[k]) ds.records.push_back(std::move(outputs[order[k].first].candidates[order[k].second]));
  }
  return ds;
}

std::string Dataset::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    out += r.to_json_line();
    out += '\n';
  }
  return out;
}

std::string Dataset::manifest_json() const {
  Json j;
  j["seed"] = seed;
  j["scenarios"] = scenario_count;
  j["total"] = records.size();
  Json by_type = Json::object();
  for (auto t : all_question_types()) by_type[std::string(to_string(t))] = 0;
  std::map<std::string, int> by_split, by_domain;
  for (const auto& r : records) {
    by_type[std::string(to_string(r.type))] = by_type[std::string(to_string(r.type))].get<int>() + 1;
    ++by_split[r.split];
    ++by_domain[std::string(to_string(r.domain))];
  }
  j["by_type"] = std::move(by_type);
  j["by_split"] = by_split;
  j["by_domain"] = by_domain;
  Json shorts = Json::array();
  for (const auto& s : shortfalls) {
    Json e;
    e["type"] = std::string(to_string(s.type));
    e["requested"] = s.requested;
    e["emitted"] = s.emitted;
    auto it = skips.find(s.type);
    e["reasons"] = it == skips.end() ? Json::object() : Json(it->second);
    shorts.push_back(std::move(e));
  }
  j["shortfalls"] = std::move(shorts);
  return j.dump(2) + "\n";
}

void write_dataset(const Dataset& ds, const std::vector<ScenarioRecord>& scenarios, const DatasetConfig& config,
                   const std::filesystem::path& root) {
  std::filesystem::create_directories(root / "images");
  write_text(root / "qa.jsonl", ds.to_jsonl());
  write_text(root / "manifest.json", ds.manifest_json());

  std::map<std::string, const ScenarioRecord*> by_id;
  for (const auto& s : scenarios) by_id[s.id] = &s;
  struct Job {
    std::string ref;
    const ScenarioRecord* scenario;
    int step;
    std::optional<int> highlight;
  };
  std::vector<Job> jobs;
  std::set<std::string> seen;
  for (const auto& r : ds.records) {
    if (!seen.insert(r.image_ref).second) continue;
    auto it = by_id.find(r.scenario_id);
    if (it == by_id.end()) throw InvariantError("record refers to unknown scenario " + r.scenario_id);
    std::optional<int> hl;
    if (r.type == QuestionType::kGrounding) hl = r.params.ids.at(0);
    jobs.push_back({r.image_ref, it->second, r.step, hl});
  }
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    const AnnotatedFrame af = annotate_scenario_frame(*job.scenario, job.step, config.camera, config.policy);
    RenderOptions opts;
    opts.highlight_label = job.highlight;
    const auto rendered = render_frame(af.frame, job.scenario->drivable, config.camera, af.annotation, opts);
    std::ofstream f(root / job.ref, std::ios::binary);
    if (!f) throw IoError("cannot write " + (root / job.ref).string());
    f.write(reinterpret_cast<const char*>(rendered.png.data()), static_cast<std::streamsize>(rendered.png.size()));
  });
}

std::vector<QARecord> read_qa_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<QARecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(QARecord::from_json_line(line));
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(lineno) + " " + e.field(), e.what());
    }
  }
  return out;
}

std::vector<std::string> downsample(const std::vector<std::string>& lines, int factor, std::uint64_t seed) {
  if (factor < 1) throw InvariantError("downsample factor must be >= 1");
  std::vector<std::size_t> idx(lines.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "downsample"));
  rng.shuffle(idx);
  idx.resize(lines.size() / static_cast<std::size_t>(factor));
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(lines[i]);
  return out;
}

}  // namespace scenevqa
