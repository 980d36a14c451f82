#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "scenevqa/config.hpp"
#include "scenevqa/synth.hpp"

namespace fs = std::filesystem;
using namespace scenevqa;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SCENEVQA_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("scenevqa_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("config parsing") {
  CHECK_NOTHROW(RunConfig::parse("{}"));
  CHECK_THROWS_AS(RunConfig::parse(R"({"sede": 3})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"qa": {"default_quota": 3, "bogus": 1}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("{"), ConfigError);
  CHECK(RunConfig::parse(R"({"seed": 12})").seed == 12u);
}

TEST_CASE("cli exit codes") {
  TempDir tmp("codes");
  fs::create_directories(tmp.path / "empty");
  CHECK(run("generate --seed 1 --scenarios " + tmp / "empty" + " --out " + tmp / "ds") == 2);
  CHECK(run("drive --suite --out " + tmp / "run") == 2);
  CHECK(run("nonsense") == 2);
  {
    std::ofstream(tmp.path / "bad.json") << R"({"sede": 1})";
  }
  CHECK(run("drive --suite --seed 1 --config " + tmp / "bad.json") == 2);

  CHECK(run("synth --out " + tmp / "scen") == 0);
  CHECK(run("drive --seed 1 --agent straight --scenarios " + tmp / "scen" + " --out " + tmp / "run") == 0);
  CHECK(fs::exists(tmp.path / "run" / "metrics.json"));
  const std::string frame = "annotate --scenario " + tmp / "scen/cut_in_0.json" + " --step 0 --out " + tmp / "frames";
  CHECK(run(frame) == 0);
  CHECK(fs::exists(tmp.path / "frames" / "cut_in_0_0000.plan.json"));
  CHECK(run(frame + " --highlight 99") == 2);
  CHECK(run("report --episodes " + tmp / "run/episodes.jsonl") == 0);
}

TEST_CASE("cli reconstruct") {
  TempDir tmp("reconstruct");
  auto s = synth_scenario("straight_road", 2);
  save_scenario(s, tmp.path / "full.json");
  CHECK(run("reconstruct --scenario " + tmp / "full.json" + " --out " + tmp / "out") == 0);
  CHECK(fs::exists(tmp.path / "out" / (s.id + ".actions.json")));

  s.horizon = 5;
  for (auto& t : s.tracks) t.states.resize(5);
  save_scenario(s, tmp.path / "short.json");
  CHECK(run("reconstruct --scenario " + tmp / "short.json") == 1);
}

TEST_CASE("cli generate is deterministic across runs and workers") {
  TempDir tmp("generate");
  REQUIRE(run("synth --out " + tmp / "scen") == 0);
  const std::string base = "generate --seed 4 --quota 3 --scenarios " + tmp / "scen";
  REQUIRE(run(base + " --jobs 1 --out " + tmp / "a") == 0);
  REQUIRE(run(base + " --jobs 3 --out " + tmp / "b") == 0);
  const auto qa = slurp(tmp.path / "a" / "qa.jsonl");
  CHECK_FALSE(qa.empty());
  CHECK(qa == slurp(tmp.path / "b" / "qa.jsonl"));
  CHECK(slurp(tmp.path / "a" / "manifest.json") == slurp(tmp.path / "b" / "manifest.json"));
}
