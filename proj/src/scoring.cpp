#include "scenevqa/scoring.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "scenevqa/scenario.hpp"

namespace scenevqa {

namespace {

using Json = nlohmann::ordered_json;

Json bucket_json(const ScoreBucket& b) {
  Json j;
  j["total"] = b.total;
  j["correct"] = b.correct;
  j["accuracy"] = b.accuracy();
  j["parse_fail"] = b.parse_fail;
  j["parse_fail_rate"] = b.parse_fail_rate();
  j["missing"] = b.missing;
  return j;
}

void add(ScoreBucket& b, bool correct, bool parse_fail, bool missing) {
  ++b.total;
  b.correct += correct;
  b.parse_fail += parse_fail;
  b.missing += missing;
}

std::string row(const std::string& name, const ScoreBucket& b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-32s %7d %8.4f %10.4f %8d\n", name.c_str(), b.total, b.accuracy(),
                b.parse_fail_rate(), b.missing);
  return buf;
}

}  // namespace

ScoreReport score_responses(const std::vector<QARecord>& records, const std::map<std::string, std::string>& responses) {
  ScoreReport rep;
  for (const auto& r : records) {
    if (is_train_only(r.type)) {
      ++rep.unscored;
      continue;
    }
    bool correct = false, parse_fail = false, missing = false;
    auto it = responses.find(r.id);
    if (it == responses.end()) {
      missing = true;
      rep.missing_ids.push_back(r.id);
    } else {
      const auto outcome = parse_response(it->second, r.options);
      parse_fail = !outcome.ok();
      correct = outcome.ok() && *outcome.letter == r.answer;
    }
    add(rep.overall, correct, parse_fail, missing);
    add(rep.by_type[std::string(to_string(r.type))], correct, parse_fail, missing);
    add(rep.by_supertype[std::string(to_string(supertype(r.type)))], correct, parse_fail, missing);
    add(rep.by_domain[std::string(to_string(r.domain))], correct, parse_fail, missing);
  }
  return rep;
}

std::string ScoreReport::to_json() const {
  Json j;
  j["overall"] = bucket_json(overall);
  for (const auto* group : {&by_supertype, &by_domain, &by_type}) {
    Json g = Json::object();
    for (const auto& [k, b] : *group) g[k] = bucket_json(b);
    const char* key = group == &by_supertype ? "by_supertype" : group == &by_domain ? "by_domain" : "by_type";
    j[key] = std::move(g);
  }
  j["missing_ids"] = missing_ids;
  j["unscored"] = unscored;
  return j.dump(2) + "\n";
}

std::string ScoreReport::to_table() const {
  char head[160];
  std::snprintf(head, sizeof head, "%-32s %7s %8s %10s %8s\n", "group", "total", "accuracy", "parse_fail",
                "missing");
  std::string out = head;
  out += row("overall", overall);
  for (const auto& [k, b] : by_supertype) out += row("supertype:" + k, b);
  for (const auto& [k, b] : by_domain) out += row("domain:" + k, b);
  for (const auto& [k, b] : by_type) out += row(k, b);
  return out;
}

std::map<std::string, std::string> read_responses(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  std::map<std::string, std::string> out;

  auto whole = Json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object() && !whole.contains("id")) {
    for (const auto& [k, v] : whole.items()) {
      if (!v.is_string()) throw SchemaError("$." + k, "reply must be a string");
      out[k] = v.get<std::string>();
    }
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError(where, "not a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) throw SchemaError(where + " $.id", "missing");
    const char* key = j.contains("response") ? "response" : "text";
    if (!j.contains(key) || !j[key].is_string()) throw SchemaError(where + " $.response", "missing");
    out[j["id"].get<std::string>()] = j[key].get<std::string>();
  }
  return out;
}

}  // namespace scenevqa
