// Copyright 2026 The gradepipe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gradepipe/roi.h"
#include "test_support.h"

namespace gradepipe {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

int run(const std::string& args) {
  const std::string cmd = std::string(GRADEPIPE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

const char* kTinyConfig =
    "roi.patch_px = 16\nnet.input_px = 16\nnet.stem_maps = 4\nnet.extractors_per_block = 2\n"
    "net.growth_rate = 2\nnet.block_pairs = 1\nnet.hidden_units = 8\npipeline.epochs = 1\n"
    "pipeline.batch_size = 5\n";

TEST(Cli, EndToEndOnTinyCorpus) {
  TempDir dir("cli");
  const fs::path cfg = dir.path() / "tiny.cfg";
  std::ofstream(cfg) << kTinyConfig;
  const std::string c = " --config " + cfg.string();
  const fs::path data = dir.path() / "data";
  ASSERT_EQ(run("synth --out " + data.string() + " --patients 4 --seed 2"), 0);
  EXPECT_TRUE(fs::exists(data / "patients.tsv"));

  const fs::path runs = dir.path() / "run";
  ASSERT_EQ(run("train" + c + " --data " + data.string() + " --out " + runs.string() +
                " --deterministic --threads 2"),
            0);
  const auto report = read_tsv(runs / "train_report.tsv");
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0][0], "epoch");
  const fs::path ckpt = runs / "model.tncp";
  ASSERT_TRUE(fs::exists(ckpt));

  const fs::path out = dir.path() / "out";
  ASSERT_EQ(run("infer" + c + " --checkpoint " + ckpt.string() + " --out " + out.string() + " " +
                data.string()),
            0);
  const auto slides = read_tsv(out / "slides.tsv");
  ASSERT_EQ(slides.size(), 20u);
  for (const auto& row : slides) EXPECT_EQ(row.size(), 6u);

  const fs::path graded = dir.path() / "graded";
  ASSERT_EQ(run("grade" + c + " --checkpoint " + ckpt.string() + " --data " + data.string() +
                " --out " + graded.string()),
            0);
  const auto patients = read_tsv(graded / "patients.tsv");
  ASSERT_EQ(patients.size(), 4u);
  for (const auto& row : patients) {
    ASSERT_EQ(row.size(), 2u);
    EXPECT_EQ(row[1].rfind("pN", 0), 0u);
  }
  EXPECT_EQ(read_tsv(graded / "slides.tsv").size(), 20u);

  const fs::path benched = dir.path() / "bench";
  ASSERT_EQ(run("bench" + c + " --checkpoint " + ckpt.string() + " --data " + data.string() +
                " --out " + benched.string()),
            0);
  bool has_forwards = false;
  for (const auto& row : read_tsv(benched / "bench.tsv")) {
    if (row[0] == "forwards") has_forwards = row[1] == "3200";
  }
  EXPECT_TRUE(has_forwards);

  const fs::path mask = dir.path() / "roi" / "m.pbm";
  ASSERT_EQ(run("roimap --slide " + (data / "p000_s0.wsip").string() + " --out " + mask.string()),
            0);
  EXPECT_EQ(read_mask_pbm(mask).width, 256);
  EXPECT_EQ(read_tsv(fs::path(mask).replace_extension(".tsv")).size(), 20u);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli_codes");
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train"), 2);
  EXPECT_EQ(run("--help"), 0);
  const fs::path bad = dir.path() / "bad.cfg";
  std::ofstream(bad) << "roi.unknown_key = 1\n";
  EXPECT_EQ(run("synth --out " + dir.path().string() + " --config " + bad.string()), 2);
  EXPECT_EQ(run("roimap --slide " + (dir.path() / "missing.wsip").string()), 3);
  std::ofstream(dir.path() / "junk.wsip") << "not a slide";
  EXPECT_EQ(run("roimap --slide " + (dir.path() / "junk.wsip").string()), 2);
}

}  // namespace
}  // namespace gradepipe
