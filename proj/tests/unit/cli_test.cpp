// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "draftsel/commands.hpp"
#include "draftsel/config.hpp"
#include "draftsel/report.hpp"
#include "support.hpp"

namespace draftsel {
namespace {

namespace fs = std::filesystem;
using testing::error_code_of;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("draftsel-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DRAFTSEL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_number(2.5e-7), "2.5e-07");
  EXPECT_THROW(format_number(std::nan("")), Error);
}

TEST(Config, DefaultsAndRoundTrip) {
  const ToolConfig c = parse_config_text("{}");
  EXPECT_EQ(c.run, RunConfig{});
  const ToolConfig custom = parse_config_text(R"({
    "vocab_size": 20, "n_drafters": 4, "draft_depth": 3, "branch_factor": 2,
    "in_domain_tv": 0.05, "off_domain_tv": 0.5, "episode_tokens": 300,
    "prompt_domain": "mixed", "seed": 18446744073709551615, "mechanism": "tree",
    "learner": "exp3", "delay_mode": "none", "loss_kind": "hybrid", "game": "chunk",
    "warmup": 5, "batch": 2, "skip": 3, "hybrid_warmup": 9, "onset_anchoring": "sliding",
    "within_chunk": "resample", "eta": 0.25, "exploration": 0.1, "seeds": [3, 4],
    "learners": ["hedge", "ucb"], "pool_sizes": [1, 2], "censor_drafter1": [1, 0],
    "censor_drafter2": [0.5], "censor_seeds": 3, "oracle_length": 3,
    "include_target_drafter": true, "study": "specialist"})");
  const auto j = to_json(custom);
  EXPECT_EQ(parse_config(nlohmann::json::parse(j.dump())), custom);
  EXPECT_EQ(custom.run.scenario.seed, 18446744073709551615ull);
  EXPECT_FALSE(custom.run.scenario.prompt_domain.has_value());
  EXPECT_EQ(to_json(parse_config(nlohmann::json::parse(to_json(c).dump()))).dump(), to_json(c).dump());
}

TEST(Config, Diagnostics) {
  auto message = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "config-invalid");
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"episode_tokens": 17})").find("episode_tokens"), std::string::npos);
  EXPECT_NE(message(R"({"bogus": 1})").find("bogus: unknown key"), std::string::npos);
  EXPECT_NE(message(R"({"vocab_size": -3})").find("vocab_size"), std::string::npos);
  EXPECT_NE(message(R"({"game": "round"})").find("game"), std::string::npos);
  EXPECT_NE(message(R"({"learner": "greedy"})").find("learner"), std::string::npos);
  EXPECT_NE(message("{\n  \"seed\": 1,\n  oops\n}").find("line 3"), std::string::npos);
  EXPECT_NE(message(R"({"pool_sizes": [4, 2]})").find("pool_sizes"), std::string::npos);
  EXPECT_NE(message(R"({"eta": 0})").find("eta"), std::string::npos);
}

TEST(Config, AcceptsManifest) {
  const ToolConfig c = parse_config_text(R"({"episode_tokens": 300})");
  nlohmann::ordered_json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = to_json(c);
  EXPECT_EQ(parse_config(nlohmann::json::parse(manifest.dump())), c);
}

TEST(SummaryJson, StableKeyOrder) {
  MetricSummary s;
  s.mat = 3.5;
  s.per_drafter_share = {0.25, 0.75};
  s.final_weights = {0.0, 1.0};
  const auto j = summary_json(s, nlohmann::ordered_json::object());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"mat", "avg_regret", "avg_regret_normalized", "final_regret",
                                            "rounds", "per_drafter_share", "final_weights", "config"}));
}

TEST(Svg, WellFormedDocument) {
  PlotSpec plot{"A & B", "x", "y", {Series{"s<1>", {1, 2, 3}, {0.5, 0.25, 1.0}}, Series{"flat", {1}, {2}}}};
  const std::string svg = render_svg(plot);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_NE(svg.find("A &amp; B"), std::string::npos);
  EXPECT_NE(svg.find("s&lt;1&gt;"), std::string::npos);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
  EXPECT_EQ(render_svg(PlotSpec{}).find("nan"), std::string::npos);
}

TEST(AtomicWrite, ReplacesContents) {
  TempDir dir;
  write_file_atomic(dir.path() / "a.txt", "one");
  write_file_atomic(dir.path() / "a.txt", "two");
  EXPECT_EQ(slurp(dir.path() / "a.txt"), "two");
  EXPECT_FALSE(fs::exists(dir.path() / "a.txt.tmp"));
}

TEST(Cli, RunWritesArtifacts) {
  TempDir dir;
  const auto config = dir.write("c.json", R"({"episode_tokens": 400, "vocab_size": 14, "n_drafters": 3})");
  ASSERT_EQ(cli("run --config " + config.string() + " --out " + (dir.path() / "out").string(), dir.path() / "log"), 0)
      << slurp(dir.path() / "log");
  const auto out = dir.path() / "out";
  for (const char* f : {"episode.csv", "summary.json", "manifest.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_GE(summary["mat"].get<double>(), 1.0);
  EXPECT_LE(summary["mat"].get<double>(), 9.0);
  EXPECT_EQ(summary["config"]["episode_tokens"], 400);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["tool_version"], std::string(kToolVersion));
  EXPECT_EQ(manifest["seeds"], nlohmann::json::array({1}));
}

TEST(Cli, RerunFromManifestIsByteIdentical) {
  TempDir dir;
  const auto config = dir.write("c.json", R"({"episode_tokens": 300, "vocab_size": 10, "n_drafters": 2})");
  ASSERT_EQ(cli("run --config " + config.string() + " --seeds 9 --out " + (dir.path() / "a").string(),
                dir.path() / "log"),
            0);
  ASSERT_EQ(cli("run --config " + (dir.path() / "a" / "manifest.json").string() + " --out " +
                    (dir.path() / "b").string(),
                dir.path() / "log"),
            0)
      << slurp(dir.path() / "log");
  EXPECT_EQ(slurp(dir.path() / "a" / "episode.csv"), slurp(dir.path() / "b" / "episode.csv"));
  EXPECT_EQ(slurp(dir.path() / "a" / "summary.json"), slurp(dir.path() / "b" / "summary.json"));
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto log = dir.path() / "log";
  const auto bad = dir.write("bad.json", R"({"episode_tokens": 17})");
  EXPECT_EQ(cli("run --config " + bad.string() + " --out " + dir.path().string(), log), 2);
  EXPECT_NE(slurp(log).find("2K+1"), std::string::npos);
  EXPECT_EQ(cli("run --config " + (dir.path() / "missing.json").string(), log), 2);
  EXPECT_EQ(cli("frobnicate", log), 2);
  const auto ok = dir.write("ok.json", R"({"episode_tokens": 300})");
  EXPECT_EQ(cli("run --config " + ok.string() + " --seeds 1,x --out " + dir.path().string(), log), 2);
  EXPECT_EQ(cli("compare --config " + ok.string() + " --learners ucb --out " + dir.path().string(), log), 2);
  const auto big = dir.write("big.json", R"({"episode_tokens": 300})");
  EXPECT_EQ(cli("oracle --config " + big.string() + " --out " + dir.path().string(), log), 3);
  EXPECT_EQ(exit_code_for("tv-unreachable"), 1);
}

TEST(Cli, CompareTableAndPlot) {
  TempDir dir;
  const auto config = dir.write("c.json", R"({"episode_tokens": 400, "vocab_size": 14})");
  ASSERT_EQ(cli("compare --config " + config.string() + " --learners normalhedge,exp3,ucb --seeds 1,2 --out " +
                    dir.path().string(),
                dir.path() / "log"),
            0);
  std::istringstream csv(slurp(dir.path() / "comparison.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "learner,mat,avg_regret,avg_regret_normalized");
  EXPECT_EQ(lines[1].rfind("normalhedge,", 0), 0u);
  EXPECT_EQ(slurp(dir.path() / "regret.svg").rfind("<?xml", 0), 0u);
}

TEST(Cli, OracleOnSmallInstance) {
  TempDir dir;
  const auto config = dir.write("c.json", R"({"vocab_size": 3, "n_drafters": 2, "draft_depth": 2,
      "episode_tokens": 10, "include_target_drafter": true, "oracle_length": 2})");
  ASSERT_EQ(cli("oracle --config " + config.string() + " --out " + dir.path().string(), dir.path() / "log"), 0)
      << slurp(dir.path() / "log");
  const std::string out = slurp(dir.path() / "log");
  EXPECT_NE(out.find("target expected_length 3 "), std::string::npos) << out;
  EXPECT_NE(out.find("round_robin output_tv"), std::string::npos);
}

TEST(Cli, OracleOnCensoringConfig) {
  TempDir dir;
  const auto config = dir.write("c.json", R"({"study": "censor", "episode_tokens": 300})");
  ASSERT_EQ(cli("oracle --config " + config.string() + " --out " + dir.path().string(), dir.path() / "log"), 0);
  const std::string out = slurp(dir.path() / "log");
  EXPECT_NE(out.find("drafter-1 expected_length 2 "), std::string::npos) << out;
  EXPECT_NE(out.find("censored_estimate_at_2 1.96"), std::string::npos) << out;
}

TEST(Cli, CensorAndScaleVerbs) {
  TempDir dir;
  const auto censor = dir.write("c.json", R"({"study": "censor", "episode_tokens": 400, "censor_seeds": 2})");
  ASSERT_EQ(cli("censor --config " + censor.string() + " --out " + dir.path().string(), dir.path() / "log"), 0);
  const auto report = nlohmann::json::parse(slurp(dir.path() / "censor.json"));
  EXPECT_DOUBLE_EQ(report["drafter1_uncensored_length"].get<double>(), 2.0);
  const auto scale = dir.write("s.json", R"({"episode_tokens": 300, "vocab_size": 16, "pool_sizes": [1, 2]})");
  ASSERT_EQ(cli("scale --config " + scale.string() + " --out " + dir.path().string(), dir.path() / "log"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "mat_vs_n.svg"));
  std::istringstream csv(slurp(dir.path() / "scaling.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 1u + 2u * 3u);
}

}  // namespace
}  // namespace draftsel
