#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "edi/harness.hpp"
#include "test_support.hpp"

using namespace edi;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(EDI_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  r.status = pclose(pipe);
  return r;
}

const fs::path& root() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "edi_cli";
    fs::remove_all(d);
    testing::write_synthetic_mnist(d / "mnist", 10, 5, 3);
    return d;
  }();
  return dir;
}

std::string fast_flags(const std::string& out) {
  return "--data " + (root() / "mnist").string() + " --out " + (root() / out).string() +
         " --train-fraction 1 --ancestor-epochs 1 --ancestor-batch 16 --retrain-epochs 1"
         " --retrain-batch 16";
}

}  // namespace

TEST_CASE("sweep refuses to run without an explicit seed") {
  const auto r = run("sweep " + fast_flags("noseed"));
  CHECK(r.status != 0);
  CHECK(r.output.find("reproducible") != std::string::npos);
  CHECK_FALSE(fs::exists(root() / "noseed"));
}

TEST_CASE("bad flags print usage and fail") {
  auto r = run("evolve --bogus");
  CHECK(r.status != 0);
  CHECK(r.output.find("Usage") != std::string::npos);
  r = run("evolve --rc 1.5");
  CHECK(r.status != 0);
  r = run("evolve --m 0");
  CHECK(r.status != 0);
  r = run("");
  CHECK(r.status != 0);
}

TEST_CASE("evolve writes one record per generation plus the ancestor") {
  const auto r = run("evolve --m 1 --rc 0.7 --generations 5 --seed 4 " + fast_flags("evolve"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  const auto recs = read_csv(root() / "evolve" / "records.csv");
  CHECK(recs.size() == 6);
  CHECK(recs.back().generation == 5);
  CHECK(fs::exists(root() / "evolve" / "ancestors" / "ancestor_0.edg"));
}

TEST_CASE("config file with flag precedence") {
  const fs::path cfg = root() / "config.json";
  std::ofstream(cfg) << R"({"generations": 3, "cluster_factors": [0.6], "seed": 11})";
  const auto r = run("evolve --config " + cfg.string() + " --generations 1 " + fast_flags("cfg"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  const auto recs = read_csv(root() / "cfg" / "records.csv");
  CHECK(recs.size() == 2);
  CHECK(recs[0].cluster_factor == 0.6);
}

TEST_CASE("sweep then report") {
  const auto s = run("sweep --seed 5 --m 1 --rc 0.5 0.9 --generations 1 " + fast_flags("sweep"));
  INFO(s.output);
  REQUIRE(s.status == 0);
  CHECK(fs::exists(root() / "sweep" / "results.csv"));
  fs::remove(root() / "sweep" / "results.csv");

  const auto r = run("report " + (root() / "sweep").string());
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(read_csv(root() / "sweep" / "results.csv").size() == 4);
  for (const auto* name : {"accuracy_m1.svg", "storage_m1.svg", "scatter.svg"})
    CHECK(fs::exists(root() / "sweep" / "plots" / name));

  const auto again = run("sweep --seed 5 --m 1 --rc 0.5 0.9 --generations 1 " + fast_flags("sweep"));
  CHECK(again.output.find("0 run, 2 resumed") != std::string::npos);
}

TEST_CASE("train-ancestor caches its result") {
  auto r = run("train-ancestor --seed 2 " + fast_flags("anc"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(r.output.find("1 trained") != std::string::npos);
  r = run("train-ancestor --seed 2 " + fast_flags("anc"));
  CHECK(r.output.find("0 trained, 1 loaded") != std::string::npos);
}
