#include <filesystem>
#include <fstream>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "scenevqa/dataset.hpp"
#include "scenevqa/scoring.hpp"
#include "scenevqa/synth.hpp"

using namespace scenevqa;

namespace {

std::vector<ScenarioRecord> two_scenarios() {
  return {synth_scenario("straight_road", 3), synth_scenario("intersection", 4)};
}

DatasetConfig small_config() {
  DatasetConfig c;
  c.seed = 9;
  c.default_quota = 10;
  return c;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("dataset generation") {
  const auto cfg = small_config();
  const auto a = generate_dataset(two_scenarios(), cfg);

  SUBCASE("deterministic and independent of jobs") {
    auto threaded = cfg;
    threaded.jobs = 4;
    auto reversed = two_scenarios();
    std::reverse(reversed.begin(), reversed.end());
    CHECK(generate_dataset(reversed, threaded).to_jsonl() == a.to_jsonl());
  }
  SUBCASE("quotas cap every type") {
    const auto m = nlohmann::json::parse(a.manifest_json());
    CHECK(m["total"].get<std::size_t>() == a.records.size());
    CHECK(a.records.size() <= 10u * kQuestionTypeCount);
    int sum = 0;
    for (auto& [k, v] : m["by_type"].items()) {
      CHECK(v.get<int>() <= 10);
      sum += v.get<int>();
    }
    CHECK(sum == static_cast<int>(a.records.size()));
  }
  SUBCASE("records are sound and unique") {
    std::set<std::string> ids;
    for (const auto& r : a.records) {
      CHECK(ids.insert(r.id).second);
      CHECK_FALSE(has_unresolved_placeholder(r.question));
      if (r.type == QuestionType::kDescribeScenario) CHECK(r.split == "train");
      CHECK(QARecord::from_json_line(r.to_json_line()).to_json_line() == r.to_json_line());
    }
  }
  SUBCASE("re-auditing from the frame reproduces every answer") {
    const auto scenarios = two_scenarios();
    for (const auto& r : a.records) {
      const auto& s = scenarios[r.scenario_id == scenarios[0].id ? 0 : 1];
      const auto af = annotate_scenario_frame(s, r.step, cfg.camera, cfg.policy);
      const auto failure = audit_record(r, {s, af.graph, cfg.qa});
      CAPTURE(r.id);
      CHECK_FALSE(failure.has_value());
    }
  }
}

TEST_CASE("colorless scenes fall short on color questions") {
  auto s = synth_scenario("static_obstacles", 0);
  for (auto& t : s.tracks) t.color.reset();
  auto cfg = small_config();
  cfg.default_quota = 0;
  cfg.quotas[QuestionType::kIdentifyColor] = 5;
  const auto ds = generate_dataset({s}, cfg);
  CHECK(ds.records.empty());
  REQUIRE(ds.shortfalls.size() == 1);
  CHECK(ds.shortfalls[0].type == QuestionType::kIdentifyColor);
  CHECK(ds.shortfalls[0].emitted == 0);
  CHECK(ds.skips.at(QuestionType::kIdentifyColor).count("no colored objects") == 1);
  const auto m = nlohmann::json::parse(ds.manifest_json());
  CHECK(m["shortfalls"][0]["reasons"].contains("no colored objects"));
}

TEST_CASE("split assignment") {
  const std::vector<SplitSpec> splits{{"train", 0.8}, {"test", 0.2}};
  int train = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto id = "s" + std::to_string(i);
    const auto sp = assign_split(id, 1, splits);
    CHECK(sp == assign_split(id, 1, splits));
    train += sp == "train";
  }
  CHECK(std::abs(train - 1600) < 5 * std::sqrt(2000 * 0.8 * 0.2));
  auto bad = small_config();
  bad.splits = {{"train", 0.5}, {"test", 0.2}};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("downsample") {
  std::vector<std::string> lines;
  for (int i = 0; i < 150000; ++i) lines.push_back(std::to_string(i));
  const auto a = downsample(lines, 4, 17);
  CHECK(a.size() == 37500);
  CHECK(a == downsample(lines, 4, 17));
  CHECK(a != downsample(lines, 4, 18));
  CHECK(std::is_sorted(a.begin(), a.end(), [](const auto& x, const auto& y) { return std::stoi(x) < std::stoi(y); }));
  CHECK(downsample({"a", "b", "c"}, 4, 1).empty());
}

TEST_CASE("scoring") {
  const auto ds = generate_dataset(two_scenarios(), small_config());
  std::map<std::string, std::string> oracle, blank;
  for (const auto& r : ds.records) {
    oracle[r.id] = std::string(1, r.answer);
    blank[r.id] = "";
  }
  const auto perfect = score_responses(ds.records, oracle);
  CHECK(perfect.overall.accuracy() == 1.0);
  CHECK(perfect.overall.parse_fail == 0);
  const int train_only = static_cast<int>(
      std::count_if(ds.records.begin(), ds.records.end(), [](const auto& r) { return r.type == QuestionType::kDescribeScenario; }));
  CHECK(perfect.unscored == train_only);

  CHECK(score_responses(ds.records, blank).overall.parse_fail_rate() == 1.0);

  auto partial = oracle;
  const auto dropped = std::find_if(ds.records.begin(), ds.records.end(),
                                    [](const auto& r) { return r.type != QuestionType::kDescribeScenario; })->id;
  partial.erase(dropped);
  const auto rep = score_responses(ds.records, partial);
  CHECK(rep.missing_ids == std::vector<std::string>{dropped});
  CHECK(rep.overall.missing == 1);
  CHECK(rep.overall.correct == rep.overall.total - 1);

  SUBCASE("constant letter on uniform answers") {
    std::mt19937_64 g(5);
    std::vector<QARecord> recs(10000);
    std::map<std::string, std::string> all_a;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      recs[i].id = "q" + std::to_string(i);
      recs[i].options = {{'A', "w"}, {'B', "x"}, {'C', "y"}, {'D', "z"}};
      recs[i].answer = static_cast<char>('A' + g() % 4);
      all_a[recs[i].id] = "A";
    }
    CHECK(std::abs(score_responses(recs, all_a).overall.accuracy() - 0.25) < 0.02);
  }
}

TEST_CASE("reply files") {
  const auto obj = temp_file("scenevqa_replies.json", R"j({"q1": "A", "q2": "(B)"})j");
  const auto lines = temp_file("scenevqa_replies.jsonl",
                               "{\"id\": \"q1\", \"response\": \"A\"}\n{\"id\": \"q2\", \"text\": \"(B)\"}\n");
  const std::map<std::string, std::string> want{{"q1", "A"}, {"q2", "(B)"}};
  CHECK(read_responses(obj) == want);
  CHECK(read_responses(lines) == want);
  std::filesystem::remove(obj);
  std::filesystem::remove(lines);
}
