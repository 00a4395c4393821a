#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(MEDSURV_CLI) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path workdir() {
  const fs::path d = fs::temp_directory_path() / "medsurv_cli_test";
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kSmallConfig =
    "boosting.rounds = 30\n"
    "mediator_boosting.rounds = 30\n"
    "tsne.perplexity = 15\n"
    "tsne.iterations = 400\n"
    "k_range = 2..3\n"
    "restarts = 2\n"
    "tree.min_leaf = 10\n";

}  // namespace

TEST_CASE("simulate is reproducible") {
  const fs::path d = workdir();
  const auto a = run("simulate --scenario All1 --n 200 --seed 5 --out " + (d / "a.csv").string());
  const auto b = run("simulate --scenario All1 --n 200 --seed 5 --out " + (d / "b.csv").string());
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.output.find("n=200") != std::string::npos);
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
  CHECK(slurp(d / "a.truth.csv") == slurp(d / "b.truth.csv"));
  const auto c = run("simulate --scenario All1 --n 200 --seed 6 --out " + (d / "c.csv").string());
  CHECK(slurp(d / "a.csv") != slurp(d / "c.csv"));
}

TEST_CASE("usage errors exit with code 2") {
  const fs::path d = workdir();
  const auto bad = run("simulate --scenario Nope --n 50 --out " + (d / "x.csv").string());
  CHECK(bad.code == 2);
  CHECK(bad.output.find("All1") != std::string::npos);
  CHECK(bad.output.find("Null") != std::string::npos);
  CHECK(run("calibrate --null-sim --alpha 1.5").code == 2);
  CHECK(run("calibrate").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("simulate --scenario All1 --n 50 --nu 0 --out " + (d / "x.csv").string()).code == 2);
  CHECK(run("--version").code == 0);
}

TEST_CASE("data errors exit with code 3") {
  const fs::path d = workdir();
  write(d / "broken.csv", "time,event,trt,mediator,age\n1,1,0,2,30\n-4,1,1,3,40\n");
  const auto r = run("analyze " + (d / "broken.csv").string() + " --out " + (d / "broken.json").string());
  CHECK(r.code == 3);
  CHECK(r.output.find("line 3") != std::string::npos);
  CHECK(run("analyze " + (d / "missing_file.csv").string()).code == 3);
  CHECK(run("report " + (d / "missing_file.json").string()).code == 3);
}

TEST_CASE("analyze is deterministic and the report reads its output") {
  const fs::path d = workdir();
  write(d / "small.cfg", kSmallConfig);
  REQUIRE(run("simulate --scenario All1 --n 300 --seed 2 --out " + (d / "an.csv").string()).code == 0);
  const std::string common = (d / "an.csv").string() + " --config " + (d / "small.cfg").string() + " --seed 11";
  const auto a = run("analyze " + common + " --threads 1 --out " + (d / "r1.json").string());
  REQUIRE(a.code == 0);
  CHECK(a.output.find("UNCALIBRATED") != std::string::npos);
  CHECK(a.output.find("verdict:") != std::string::npos);
  const auto b = run("analyze " + common + " --threads 2 --out " + (d / "r2.json").string());
  REQUIRE(b.code == 0);
  CHECK(slurp(d / "r1.json") == slurp(d / "r2.json"));
  CHECK(fs::exists(d / "r1_figures" / "niecc.csv"));

  const auto rep = run("report " + (d / "r1.json").string());
  CHECK(rep.code == 0);
  CHECK(rep.output.find("verdict") != std::string::npos);

  const std::string full = slurp(d / "r1.json");
  write(d / "trunc.json", full.substr(0, full.size() / 2));
  const auto t = run("report " + (d / "trunc.json").string());
  CHECK(t.code == 3);
  CHECK(t.output.find("truncated") != std::string::npos);
}

TEST_CASE("seed from the environment") {
  const fs::path d = workdir();
  write(d / "small.cfg", kSmallConfig);
  REQUIRE(run("simulate --scenario Null --n 200 --seed 3 --out " + (d / "env.csv").string()).code == 0);
  const std::string base = "analyze " + (d / "env.csv").string() + " --config " + (d / "small.cfg").string();
  const auto flag = run(base + " --seed 21 --out " + (d / "e1.json").string());
  const std::string env_cmd = "MEDSURV_SEED=21 " + std::string(MEDSURV_CLI) + " " + base + " --out " +
                              (d / "e2.json").string() + " >/dev/null 2>&1";
  REQUIRE(flag.code == 0);
  REQUIRE(std::system(env_cmd.c_str()) == 0);
  CHECK(slurp(d / "e1.json") == slurp(d / "e2.json"));
  const std::string bad_env = "MEDSURV_SEED=abc " + std::string(MEDSURV_CLI) + " " + base + " --out " +
                              (d / "e3.json").string() + " >/dev/null 2>&1";
  const int status = std::system(bad_env.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
