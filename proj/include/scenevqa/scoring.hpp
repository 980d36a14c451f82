#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenevqa/qa.hpp"

namespace scenevqa {

struct ScoreBucket {
  int total{0};
  int correct{0};
  int parse_fail{0};
  int missing{0};

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
  double parse_fail_rate() const { return total ? static_cast<double>(parse_fail) / total : 0.0; }
};

struct ScoreReport {
  ScoreBucket overall;
  std::map<std::string, ScoreBucket> by_type;
  std::map<std::string, ScoreBucket> by_supertype;
  std::map<std::string, ScoreBucket> by_domain;
  std::vector<std::string> missing_ids;
  int unscored{0};  // train-only records, which are never graded

  std::string to_json() const;
  std::string to_table() const;
};

/// Grades raw replies against the records. Missing replies count as wrong
/// and are listed; parse failures count as wrong and are tallied apart.
ScoreReport score_responses(const std::vector<QARecord>& records, const std::map<std::string, std::string>& responses);

/// Accepts either one JSON object mapping id -> reply, or JSONL lines of
/// {"id": ..., "response": ...} (a "text" key is accepted too).
std::map<std::string, std::string> read_responses(const std::filesystem::path& path);

}  // namespace scenevqa
