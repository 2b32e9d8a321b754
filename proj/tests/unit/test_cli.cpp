// Copyright 2026  The afp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "afp/io_util.hpp"
#include "support.hpp"

namespace afp {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int status = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string tool(const char* var, const char* fallback) {
  const char* p = std::getenv(var);
  return p ? p : fallback;
}

std::string cli() { return tool("AFP_CLI", AFP_CLI_PATH); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir;
    const std::string cmd = quote(tool("AFP_MAKE_CORPUS", AFP_MAKE_CORPUS_PATH)) + " --out-dir " + quote(dir_->path().string()) +
                            " --tracks 4 --track-seconds 6 --noises-per-scene 1 --impulse-responses 2 --seed 7";
    ASSERT_EQ(std::system((cmd + " > /dev/null 2>&1").c_str()), 0);
    Outcome r = afp("index build --manifest " + p("index.json") + " --out " + p("i.afpi"));
    ASSERT_EQ(r.status, 0) << r.err;
  }
  static void TearDownTestSuite() { delete dir_; }

  static std::string p(const std::string& name) { return quote((*dir_ / name).string()); }

  static Outcome afp(const std::string& args) {
    Outcome r;
    const fs::path out = *dir_ / "stdout.txt", err = *dir_ / "stderr.txt";
    const std::string cmd =
        quote(cli()) + " " + args + " > " + quote(out.string()) + " 2> " + quote(err.string());
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_text_file(out);
    r.err = read_text_file(err);
    return r;
  }

  static test::TempDir* dir_;
};
test::TempDir* Cli::dir_ = nullptr;

TEST_F(Cli, InspectPrintsJson) {
  const Outcome r = afp("index inspect --index " + p("i.afpi") + " --tracks");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n_tracks"], 4);
  EXPECT_EQ(j["profile"], "maxfilter");
  EXPECT_NE(r.err.find("seed=0"), std::string::npos);
}

TEST_F(Cli, QueryFindsTheTrackAtOffsetZero) {
  const Outcome r = afp("--seed 3 query --index " + p("i.afpi") + " --audio " + p("tracks/track0002.wav"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["track_id"], 2);
  EXPECT_EQ(j["offset_frames"], 0);
  EXPECT_EQ(j["mode"], "raw");
  EXPECT_NE(r.err.find("seed=3"), std::string::npos);
}

TEST_F(Cli, MixQueryReportsBothPaths) {
  const Outcome r = afp("query --mix --denoiser spectral-sub --index " + p("i.afpi") + " --audio " + p("tracks/track0001.wav"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["mode"], "mix");
  EXPECT_TRUE(j.contains("raw"));
  EXPECT_TRUE(j.contains("denoised"));
  EXPECT_EQ(j["track_id"], 1);
  EXPECT_EQ(afp("query --mix --index " + p("i.afpi") + " --audio " + p("tracks/track0001.wav")).status, 1);
}

TEST_F(Cli, ExternalDenoiserFailure) {
  const std::string base = "query --index " + p("i.afpi") + " --audio " + p("tracks/track0001.wav");
  const Outcome only = afp(base + " --denoiser 'external:\"false\"'");
  EXPECT_EQ(only.status, 4);
  EXPECT_TRUE(only.out.empty());
  const Outcome mix = afp(base + " --mix --denoiser 'external:\"false\"'");
  ASSERT_EQ(mix.status, 0) << mix.err;
  EXPECT_TRUE(nlohmann::json::parse(mix.out)["denoiser_failed"].get<bool>());
  EXPECT_NE(mix.err.find("warning"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(afp("query --bogus").status, 1);
  EXPECT_EQ(afp("").status, 1);
  EXPECT_EQ(afp("query --index " + p("missing.afpi") + " --audio " + p("tracks/track0001.wav")).status, 2);
  write_text_file(*dir_ / "bad.afpi", "junk");
  const Outcome bad = afp("query --index " + p("bad.afpi") + " --audio " + p("tracks/track0001.wav"));
  EXPECT_EQ(bad.status, 3);
  EXPECT_NE(bad.err.find("byte offset 0"), std::string::npos);
  EXPECT_EQ(afp("query --denoiser wiener --index " + p("i.afpi") + " --audio " + p("tracks/track0001.wav")).status, 1);
  EXPECT_EQ(afp("--threads many index inspect --index " + p("i.afpi")).status, 1);
}

TEST_F(Cli, IndexBuildReportsEveryMissingFile) {
  write_text_file(*dir_ / "holes.json", R"([{"path": "x1.wav", "track_id": 0, "name": "a"},
                                            {"path": "x2.wav", "track_id": 1, "name": "b"}])");
  const Outcome r = afp("index build --manifest " + p("holes.json") + " --out " + p("h.afpi"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("x1.wav"), std::string::npos);
  EXPECT_NE(r.err.find("x2.wav"), std::string::npos);
  EXPECT_FALSE(fs::exists(*dir_ / "h.afpi"));
}

TEST_F(Cli, ConfigFileOverlay) {
  write_text_file(*dir_ / "c.json", R"({"seed": 9, "query": {"denoiser": "spectral-sub"}})");
  const Outcome r = afp("--config " + p("c.json") + " query --index " + p("i.afpi") + " --audio " + p("tracks/track0001.wav"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["denoiser"], "spectral-sub");
  EXPECT_NE(r.err.find("seed=9"), std::string::npos);
  write_text_file(*dir_ / "c2.json", R"({"bogus": 1})");
  EXPECT_EQ(afp("--config " + p("c2.json") + " index inspect --index " + p("i.afpi")).status, 1);
  write_text_file(*dir_ / "c3.json", "{not json");
  EXPECT_EQ(afp("--config " + p("c3.json") + " index inspect --index " + p("i.afpi")).status, 1);
}

TEST_F(Cli, AugmentIsReproducible) {
  const std::string args = "--seed 42 augment --manifest " + p("queries.json") + " --noise-bank " + p("noise.json") +
                           " --ir-bank " + p("ir.json") + " --out-dir " + p("aug");
  const Outcome a = afp(args);
  ASSERT_EQ(a.status, 0) << a.err;
  const std::string wav = read_text_file(*dir_ / "aug" / "track0000.aug0.wav");
  const std::string rec = read_text_file(*dir_ / "aug" / "track0000.aug0.json");
  const Outcome b = afp(args);
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(wav, read_text_file(*dir_ / "aug" / "track0000.aug0.wav"));
  EXPECT_EQ(rec, read_text_file(*dir_ / "aug" / "track0000.aug0.json"));
  EXPECT_EQ(nlohmann::json::parse(rec)["seed"].is_number(), true);
  EXPECT_EQ(afp("augment --manifest " + p("queries.json") + " --out-dir " + p("aug")).status, 1);
}

TEST_F(Cli, BenchWritesJsonAndCsv) {
  const std::string bench = "bench --lengths 3 --index " + p("i.afpi") + " --queries " + p("queries.json") +
                           " --noise-bank " + p("noise.json") + " --ir-bank " + p("ir.json") + " --csv " + p("b.csv") +
                           " --out " + p("b.json");
  const std::string args = "--seed 42 " + bench;
  const Outcome a = afp(args);
  ASSERT_EQ(a.status, 0) << a.err;
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["n_tracks"], 4);
  EXPECT_EQ(read_text_file(*dir_ / "b.json"), a.out);
  const std::string csv = read_text_file(*dir_ / "b.csv");
  EXPECT_EQ(csv.rfind("length_s,condition,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(afp(args).out, a.out);
  EXPECT_EQ(afp("--seed 42 --threads 2 " + bench).out, a.out);
}

}  // namespace
}  // namespace afp
