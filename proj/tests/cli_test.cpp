// Copyright 2026 The pubfeat-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end checks of the installed binary; PUBFEAT_CLI_PATH is injected by
// the build so the tests exercise exactly the artifact that ships.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pubfeat/csv.hpp"
#include "pubfeat/dataio.hpp"

using namespace pubfeat;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PUBFEAT_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult result;
  char buf[4096];
  while (size_t got = fread(buf, 1, sizeof buf, pipe)) {
    result.output.append(buf, got);
  }
  const int rc = pclose(pipe);
  result.status = rc < 0 ? rc : WEXITSTATUS(rc);
  return result;
}

// Fresh scratch directory per test case, removed on destruction.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("pubfeat_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& leaf) const {
    return (dir / leaf).string();
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Generates a small dataset and returns the prefix used by gen-data.
std::string make_dataset(const Scratch& scratch, uint64_t seed = 0) {
  const std::string prefix = scratch.path("data");
  const CmdResult r = run_cli(
      "gen-data --items 6 --users 10 --feature-dim 16 --dim 3 "
      "--features-per-item 4 --examples 120 --noise-std 0.1 --seed " +
      std::to_string(seed) + " --out " + prefix);
  REQUIRE(r.status == 0);
  return prefix;
}

std::string train_args(const std::string& prefix, const std::string& out) {
  return "train --data " + prefix + "_interactions.csv --features " + prefix +
         "_features.csv --out " + out;
}

size_t line_count(const std::string& text) {
  size_t lines = 0;
  for (char c : text) lines += c == '\n';
  return lines;
}

}  // namespace

TEST_CASE("help lists every subcommand") {
  const CmdResult r = run_cli("--help");
  CHECK(r.status == 0);
  for (const char* name :
       {"gen-data", "train", "sweep", "complexity", "fedsim"}) {
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("a subcommand is required") {
  const CmdResult r = run_cli("");
  CHECK(r.status != 0);
}

TEST_CASE("gen-data writes loadable, seed-deterministic files") {
  const Scratch scratch("gendata");
  const std::string prefix = make_dataset(scratch, 7);

  const InteractionDataset ds =
      load_interactions(prefix + "_interactions.csv");
  CHECK(ds.size() == 120);
  CHECK(ds.item_count == 6);
  CHECK(ds.user_count == 10);
  const PublicFeatureMatrix features =
      load_feature_matrix(prefix + "_features.csv");
  CHECK(features.item_count() == 6);
  CHECK(features.feature_dim() == 16);
  CHECK(fs::exists(prefix + "_theta.csv"));

  const std::string again = scratch.path("again");
  const CmdResult r = run_cli(
      "gen-data --items 6 --users 10 --feature-dim 16 --dim 3 "
      "--features-per-item 4 --examples 120 --noise-std 0.1 --seed 7 "
      "--out " + again);
  REQUIRE(r.status == 0);
  CHECK(read_file(prefix + "_interactions.csv") ==
        read_file(again + "_interactions.csv"));
  CHECK(read_file(prefix + "_features.csv") ==
        read_file(again + "_features.csv"));

  const std::string other = scratch.path("other");
  REQUIRE(run_cli("gen-data --items 6 --users 10 --feature-dim 16 --dim 3 "
                  "--features-per-item 4 --examples 120 --noise-std 0.1 "
                  "--seed 8 --out " + other).status == 0);
  CHECK(read_file(prefix + "_interactions.csv") !=
        read_file(other + "_interactions.csv"));
}

TEST_CASE("train reports the calibrated noise and writes its outputs") {
  const Scratch scratch("train");
  const std::string prefix = make_dataset(scratch);
  const std::string out = scratch.path("run");
  const CmdResult r = run_cli(train_args(prefix, out) +
                              " --algo ssp2 --steps 5 --epsilon 1 "
                              "--delta 1e-5 --seed 3");
  REQUIRE(r.status == 0);
  CHECK(r.output.find("algo=ssp2") != std::string::npos);
  CHECK(r.output.find("sigma=9.597") != std::string::npos);
  CHECK(fs::exists(out + "/trace.csv"));
  CHECK(fs::exists(out + "/checkpoint.csv"));
  CHECK(fs::exists(out + "/metrics.csv"));
  REQUIRE(fs::exists(out + "/accounting.csv"));

  // The accounting file must invert back to the requested budget.
  csv::Reader reader(out + "/accounting.csv",
                     "mechanism,beta,sigma,epsilon,delta");
  bool found = false;
  while (reader.next()) {
    if (reader.fields()[0] == "ssp2") {
      found = true;
      CHECK(reader.double_field(3) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(reader.double_field(4) == 1e-5);
    }
  }
  CHECK(found);
}

TEST_CASE("per-step noise scales the reported sigma by sqrt(T)") {
  const Scratch scratch("sigma");
  const std::string prefix = make_dataset(scratch);
  const CmdResult r = run_cli(train_args(prefix, scratch.path("run")) +
                              " --algo ssp1 --steps 4 --epsilon 1 "
                              "--delta 1e-5");
  REQUIRE(r.status == 0);
  CHECK(r.output.find("sigma=19.194") != std::string::npos);
}

TEST_CASE("training is deterministic in the seed") {
  const Scratch scratch("seed");
  const std::string prefix = make_dataset(scratch);
  const std::string flags = " --algo ssp2 --steps 4 --epsilon 1 --seed 11";
  REQUIRE(run_cli(train_args(prefix, scratch.path("a")) + flags).status == 0);
  REQUIRE(run_cli(train_args(prefix, scratch.path("b")) + flags).status == 0);
  CHECK(read_file(scratch.path("a") + "/checkpoint.csv") ==
        read_file(scratch.path("b") + "/checkpoint.csv"));

  REQUIRE(run_cli(train_args(prefix, scratch.path("c")) +
                  " --algo ssp2 --steps 4 --epsilon 1 --seed 12").status ==
          0);
  CHECK(read_file(scratch.path("a") + "/checkpoint.csv") !=
        read_file(scratch.path("c") + "/checkpoint.csv"));
}

TEST_CASE("no-noise runs skip the accounting file") {
  const Scratch scratch("nonoise");
  const std::string prefix = make_dataset(scratch);
  const std::string out = scratch.path("clean");
  const CmdResult r = run_cli(train_args(prefix, out) +
                              " --algo ssp2 --steps 3 --no-noise");
  REQUIRE(r.status == 0);
  CHECK(fs::exists(out + "/trace.csv"));
  CHECK(!fs::exists(out + "/accounting.csv"));
}

TEST_CASE("train rejects bad invocations") {
  const Scratch scratch("bad");
  const std::string prefix = make_dataset(scratch);

  // Missing required inputs.
  CHECK(run_cli("train --algo ssp2").status != 0);

  const CmdResult unknown = run_cli(train_args(prefix, scratch.path("x")) +
                                    " --algo not-a-method");
  CHECK(unknown.status != 0);
  CHECK(unknown.output.find("error") != std::string::npos);

  // resamples must divide steps.
  CHECK(run_cli(train_args(prefix, scratch.path("y")) +
                " --algo ssp-resampled-r3 --steps 10").status != 0);
}

TEST_CASE("train reads flags from a config file") {
  const Scratch scratch("config");
  const std::string prefix = make_dataset(scratch);
  const std::string out = scratch.path("cfgrun");
  {
    std::ofstream cfg(scratch.path("run.ini"));
    cfg << "[train]\n"
        << "data=\"" << prefix << "_interactions.csv\"\n"
        << "features=\"" << prefix << "_features.csv\"\n"
        << "algo=\"ssp2\"\n"
        << "steps=3\n"
        << "no-noise=true\n"
        << "out=\"" << out << "\"\n";
  }
  const CmdResult r =
      run_cli("--config " + scratch.path("run.ini") + " train");
  REQUIRE(r.status == 0);
  CHECK(fs::exists(out + "/checkpoint.csv"));
}

TEST_CASE("sweep emits one row per run and metric") {
  const Scratch scratch("sweep");
  const std::string out = scratch.path("sweep.csv");
  const CmdResult r = run_cli(
      "sweep --algos ssp2,dpsgd --epsilons 1,3 --seeds 2 --steps 3 "
      "--synth-items 4 --synth-users 6 --synth-feature-dim 12 "
      "--synth-features-per-item 3 --synth-examples 40 --out " + out);
  REQUIRE(r.status == 0);
  // 2 algos x 2 epsilons x 2 seeds x 2 metrics, plus the header.
  CHECK(line_count(read_file(out)) == 17);

  csv::Reader reader(out, "algo,epsilon,seed,metric,value");
  size_t rows = 0;
  while (reader.next()) {
    ++rows;
    CHECK((reader.fields()[3] == "final_loss" ||
           reader.fields()[3] == "rmse"));
  }
  CHECK(rows == 16);
}

TEST_CASE("complexity writes the cost sweep") {
  const Scratch scratch("complexity");
  const std::string out = scratch.path("cost.csv");
  const CmdResult r = run_cli(
      "complexity --examples 1000 --items 10 --dim 4 --unit-cost 80 "
      "--epochs 5 --batches 1,10,100 --out " + out);
  REQUIRE(r.status == 0);
  csv::Reader reader(out, "B,epochs,beta,ratio");
  size_t rows = 0;
  while (reader.next()) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("fedsim audits its transcript and matches the monolithic run") {
  const Scratch scratch("fedsim");
  const std::string out = scratch.path("fed");
  const CmdResult r = run_cli(
      "fedsim --synth-items 4 --synth-users 8 --synth-feature-dim 12 "
      "--synth-features-per-item 3 --synth-examples 60 --steps 4 "
      "--epsilon 1 --seed 5 --check-equivalence --out " + out);
  REQUIRE(r.status == 0);
  CHECK(r.output.find("audit: ok") != std::string::npos);
  CHECK(fs::exists(out + "/transcript.csv"));
  CHECK(fs::exists(out + "/trace.csv"));
  CHECK(fs::exists(out + "/checkpoint.csv"));
}
