#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenevqa/annotation.hpp"
#include "scenevqa/qa.hpp"
#include "scenevqa/scenario.hpp"
#include "scenevqa/scene_graph.hpp"

namespace scenevqa {

/// A frame with its visibility annotation and scene graph.
struct AnnotatedFrame {
  FrameSnapshot frame;
  FrameAnnotation annotation;
  SceneGraph graph;
};

AnnotatedFrame annotate_scenario_frame(const ScenarioRecord& s, int step, const CameraRig& camera,
                                       const VisibilityPolicy& policy);

struct SplitSpec {
  std::string name;
  double fraction{0.0};
};

struct DatasetConfig {
  std::uint64_t seed{0};
  int default_quota{10};
  std::map<QuestionType, int> quotas;  // overrides default_quota
  std::vector<SplitSpec> splits{{"train", 0.8}, {"test", 0.2}};
  int keyframe_stride{5};              // 2 Hz at 0.1 s steps
  int per_frame_type_cap{2};           // instances of one type per keyframe
  CameraRig camera{CameraRig::generation()};
  VisibilityPolicy policy;
  QaSettings qa;
  int jobs{1};

  int quota_for(QuestionType t) const;
  void validate() const;
};

/// Split of a whole scenario, drawn from a hash of (seed, scenario id).
std::string assign_split(const std::string& scenario_id, std::uint64_t seed, const std::vector<SplitSpec>& splits);

struct Shortfall {
  QuestionType type;
  int requested{0};
  int emitted{0};
};

struct Dataset {
  std::uint64_t seed{0};
  std::size_t scenario_count{0};
  std::vector<QARecord> records;
  std::vector<Shortfall> shortfalls;
  /// type -> reason -> number of skipped frames or bindings
  std::map<QuestionType, std::map<std::string, int>> skips;

  std::string to_jsonl() const;
  std::string manifest_json() const;
};

/// Deterministic for a fixed (scenarios, config); `config.jobs` never changes
/// the output. Scenarios are processed in ascending id order.
Dataset generate_dataset(std::vector<ScenarioRecord> scenarios, const DatasetConfig& config);

/// Writes qa.jsonl, manifest.json and the referenced images under `root`.
void write_dataset(const Dataset& ds, const std::vector<ScenarioRecord>& scenarios, const DatasetConfig& config,
                   const std::filesystem::path& root);

std::vector<QARecord> read_qa_jsonl(const std::filesystem::path& path);

/// Keeps floor(n / factor) lines chosen by a seeded shuffle, in their
/// original order.
std::vector<std::string> downsample(const std::vector<std::string>& lines, int factor, std::uint64_t seed);

}  // namespace scenevqa
