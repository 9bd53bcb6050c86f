#include <cstdio>
#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

using mgca::testing::fixture_dir;
using mgca::testing::TempDir;
using nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI against the separable fixture with output under `out`; stderr is folded into the capture.
Run run_cli(const TempDir& out, const std::string& args) {
  const std::string cmd = quote(MGCA_CLI_PATH) + " --config " + quote((fixture_dir("separable") / "detect.toml").string()) +
                          " --set " + quote("output_dir=" + out.path().string()) + " " + args + " 2>&1";
  Run r{0, {}};
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json parse_last_json(const std::string& out) {
  const auto pos = out.rfind("\n{");
  return json::parse(pos == std::string::npos ? out : out.substr(pos + 1));
}

}  // namespace

TEST(Cli, EndToEndWorkflow) {
  TempDir out;

  auto r = run_cli(out, "split");
  ASSERT_EQ(r.status, 0) << r.out;
  auto j = parse_last_json(r.out);
  EXPECT_EQ(j["train"].get<int>() + j["val"].get<int>() + j["test"].get<int>(), 200);
  EXPECT_TRUE(std::filesystem::exists(j["file"].get<std::string>()));

  r = run_cli(out, "clues");
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(parse_last_json(r.out)["posts"], 200);

  r = run_cli(out, "encode");
  ASSERT_EQ(r.status, 0) << r.out;
  j = parse_last_json(r.out);
  EXPECT_EQ(j["d_joint"], 32);
  EXPECT_EQ(j["d_manip"], 16);

  r = run_cli(out, "--set epochs=3 train");
  ASSERT_EQ(r.status, 0) << r.out;
  j = parse_last_json(r.out);
  EXPECT_GE(j["best_epoch"].get<int>(), 1);
  EXPECT_TRUE(std::filesystem::exists(out / "checkpoint" / "manifest.json"));
  std::ifstream log(out / "train_log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    EXPECT_EQ(json::parse(line)["epoch"], ++lines);
  }
  EXPECT_EQ(lines, 3);

  r = run_cli(out, "eval --split test");
  ASSERT_EQ(r.status, 0) << r.out;
  j = parse_last_json(r.out);
  EXPECT_EQ(j["count"], 40);
  EXPECT_TRUE(std::filesystem::exists(out / "metrics-test.json"));

  const auto corpus = fixture_dir("separable");
  std::ifstream posts(corpus / "posts.jsonl");
  std::ofstream input(out / "input.jsonl");
  for (int i = 0; i < 3; ++i) {
    std::string line;
    std::getline(posts, line);
    auto p = json::parse(line);
    p["visual_ref"] = i == 2 ? "missing.png" : (corpus / p["visual_ref"].get<std::string>()).string();
    input << p.dump() << '\n';
  }
  input.close();
  r = run_cli(out, "predict --input " + quote((out / "input.jsonl").string()));
  ASSERT_EQ(r.status, 0) << r.out;
  j = parse_last_json(r.out);
  EXPECT_EQ(j["predictions"], 2);
  EXPECT_EQ(j["errors"], 1);
  std::ifstream preds(out / "predictions.jsonl");
  int pred_lines = 0;
  for (std::string line; std::getline(preds, line);) ++pred_lines;
  EXPECT_EQ(pred_lines, 3);

  r = run_cli(out, "analyze heatmap --per-class 4 --split test");
  ASSERT_EQ(r.status, 0) << r.out;
  j = parse_last_json(r.out);
  EXPECT_EQ(j["samples"], 8);
  EXPECT_TRUE(std::filesystem::exists(j["png"].get<std::string>()));
}

TEST(Cli, Ablate) {
  TempDir out;
  const auto r = run_cli(out, "--set epochs=2 ablate --branch vem");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto j = parse_last_json(r.out);
  EXPECT_EQ(j["masked_branch"], "visual");
  EXPECT_TRUE(std::filesystem::exists(out / "ablate-visual" / "metrics.json"));
}

TEST(Cli, Errors) {
  TempDir out;
  auto r = run_cli(out, "--set nonsense=1 split");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("error: "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("nonsense"), std::string::npos) << r.out;

  r = run_cli(out, "ablate --branch colour");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("colour"), std::string::npos) << r.out;

  r = run_cli(out, "eval --checkpoint " + quote((out / "absent").string()));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("error: "), std::string::npos) << r.out;
}

TEST(Cli, IngestReportsRejects) {
  TempDir out;
  std::ofstream(out / "bad.jsonl") << "{\"id\":\"x\"}\nnot json\n";
  const auto r = run_cli(out, "ingest " + quote((out / "bad.jsonl").string()));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("\"rejected\""), std::string::npos) << r.out;
}
