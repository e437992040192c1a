#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PSL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("psl-cli-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::set<std::string> csv_names(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") out.insert(e.path().filename().string());
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes one CSV per strategy and a summary") {
  const auto dir = fresh_dir("tiny");
  REQUIRE(run_cli("simulate --preset tiny-k2h3 --seed 5 --out " + dir.string()) == 0);
  const auto names = csv_names(dir);
  CHECK(names == std::set<std::string>{"tiny-k2h3_traditional_5.csv", "tiny-k2h3_partial-no-sa_5.csv",
                                       "tiny-k2h3_partial-sa_5.csv"});
  for (const auto& name : names) {
    std::ifstream in(dir / name);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "iter,agent,hypothesis,log_belief");
    std::size_t rows = 0;
    std::string last;
    while (std::getline(in, line)) {
      ++rows;
      last = line;
    }
    // 10 snapshots (stride 10 over 100 iterations) x 2 agents x 3 hypotheses.
    CHECK(rows == 60);
    CHECK(last.rfind("100,2,3,", 0) == 0);
  }
  const auto summary = json::parse(slurp(dir / "tiny-k2h3_summary.json"));
  CHECK(summary["strategies"].size() == 3);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = fresh_dir("rerun-a");
  const auto b = fresh_dir("rerun-b");
  REQUIRE(run_cli("simulate --preset tiny-k2h3 --runs 3 --seed 9 --out " + a.string()) == 0);
  REQUIRE(run_cli("simulate --preset tiny-k2h3 --runs 3 --seed 9 --out " + b.string()) == 0);
  const auto names = csv_names(a);
  CHECK(names.size() == 9);
  CHECK(names == csv_names(b));
  for (const auto& name : names) CHECK(slurp(a / name) == slurp(b / name));
  CHECK(slurp(a / "tiny-k2h3_summary.json") == slurp(b / "tiny-k2h3_summary.json"));
}

TEST_CASE("analyze prints the profile") {
  const auto dir = fresh_dir("analyze");
  fs::create_directories(dir);
  const auto out = dir / "analysis.json";
  REQUIRE(run_cli("analyze --preset gaussian-siv-a --theta-tx 2 --out " + out.string()) == 0);
  const auto doc = json::parse(slurp(out));
  CHECK(doc["theta_tx"] == 2);
  CHECK(doc["agents"].size() == 10);
  CHECK(doc["verdicts"].size() == 3);
  REQUIRE(run_cli("check-assumptions --preset discrete-siv-b --out " + (dir / "a.json").string()) == 0);
  CHECK(json::parse(slurp(dir / "a.json")).contains("assumptions"));
}

TEST_CASE("invalid input exits with status 2") {
  CHECK(run_cli("simulate --preset tiny-k2h3 --horizon 0") == 2);
  CHECK(run_cli("analyze --preset gaussian-siv-a --lambda 1.5") == 2);
  CHECK(run_cli("analyze --preset nope") == 2);
  CHECK(run_cli("analyze") == 2);
  CHECK(run_cli("reproduce fig9") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("analyze --config /nonexistent/file.json") == 4);
}

TEST_CASE("reproduce writes panels and a verdict table") {
  const auto dir = fresh_dir("fig5a");
  REQUIRE(run_cli("reproduce fig5a --runs 2 --horizon 300 --out " + dir.string()) == 0);
  CHECK(csv_names(dir).size() == 9);
  const auto table = json::parse(slurp(dir / "fig5a_verdicts.json"));
  CHECK(table["rows"].size() == 9);
  CHECK(table["lambda"] == 0.5);
  CHECK(table.contains("all_agree"));
}

}  // TEST_SUITE
