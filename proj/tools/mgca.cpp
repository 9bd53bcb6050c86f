#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mgca/mgca.hpp"

namespace fs = std::filesystem;
using namespace mgca;

namespace {

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got \"" + kv + "\"");
    cfg.set(detail::trim(kv.substr(0, eq)), kv.substr(eq + 1), fs::current_path());
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal fake-news detection and attribution"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "run configuration (key = value file)");
  app.add_option("--set", overrides, "override a configuration key, key=value (repeatable)");

  auto* ingest = app.add_subcommand("ingest", "validate a JSONL dataset and report rejects");
  std::string ingest_path, ingest_out;
  bool no_schema_check = false;
  ingest->add_option("dataset", ingest_path, "dataset JSONL")->required();
  ingest->add_flag("--no-schema-check", no_schema_check, "flag undecodable visuals instead of rejecting");
  ingest->add_option("--write", ingest_out, "write the accepted posts, normalized, to this JSONL file");

  auto* split = app.add_subcommand("split", "stratified train/val/test split");
  std::string ratios;
  std::uint64_t split_seed = 0;
  auto* split_seed_opt = split->add_option("--seed", split_seed, "split seed");
  split->add_option("--ratios", ratios, "train,val,test fractions");

  auto* clues = app.add_subcommand("clues", "collect clues for every post into the clue cache");
  std::string providers;
  clues->add_option("--providers", providers, "fixture | live");

  auto* encode = app.add_subcommand("encode", "build the feature cache");
  std::string adapters;
  encode->add_option("--adapters", adapters, "fixture | live");

  auto* train = app.add_subcommand("train", "train a model, keeping the best validation checkpoint");
  std::string task;
  train->add_option("--task", task, "detect | attribute");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string checkpoint, split_name = "test", report;
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory (default: <output_dir>/checkpoint)");
  eval->add_option("--split", split_name, "train | val | test");
  eval->add_option("--report", report, "metrics JSON path (default: <output_dir>/metrics-<split>.json)");

  auto* predict = app.add_subcommand("predict", "predict posts from a JSONL file");
  std::string input, output;
  predict->add_option("--checkpoint", checkpoint, "checkpoint directory (default: <output_dir>/checkpoint)");
  predict->add_option("--input", input, "posts JSONL")->required();
  predict->add_option("--output", output, "predictions JSONL (default: <output_dir>/predictions.jsonl)");

  auto* ablate = app.add_subcommand("ablate", "train and test with one branch disabled");
  std::string branch;
  ablate->add_option("--branch", branch, "entity | event | temporal | manipulation (PSCC-NET) | visual (vem)")
      ->required();

  auto* analyze = app.add_subcommand("analyze", "analysis of a trained model");
  analyze->require_subcommand(1);
  auto* heatmap = analyze->add_subcommand("heatmap", "pairwise cosine similarity of penultimate representations");
  int per_class = 0;
  std::uint64_t sample_seed = 0;
  heatmap->add_option("--per-class", per_class, "samples per class (default: heatmap_per_class)");
  heatmap->add_option("--checkpoint", checkpoint, "checkpoint directory (default: <output_dir>/checkpoint)");
  heatmap->add_option("--split", split_name, "train | val | test");
  heatmap->add_option("--seed", sample_seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      auto ds = ingest_dataset(ingest_path, !no_schema_check);
      if (!ingest_out.empty()) write_posts(ingest_out, ds.posts);
      print(ds.report.to_json());
      return 0;
    }

    if (!providers.empty()) overrides.push_back("providers=" + providers);
    if (!adapters.empty()) overrides.push_back("adapters=" + adapters);
    if (!task.empty()) overrides.push_back("task=" + task);
    Pipeline pipeline(load_config(config_path, overrides));
    const auto& cfg = pipeline.config();
    const fs::path ckpt = checkpoint.empty() ? cfg.checkpoint_dir() : fs::path(checkpoint);

    if (split->parsed()) {
      SplitRatios r = cfg.split_ratios;
      if (!ratios.empty()) r = detail::parse_ratios(ratios);
      const auto& s = pipeline.resplit(r, *split_seed_opt ? split_seed : cfg.split_seed);
      print({{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}, {"seed", s.seed},
             {"file", cfg.split_file.string()}});
    } else if (clues->parsed()) {
      print({{"posts", pipeline.clues().size()}, {"cache", cfg.clue_cache.string()}});
    } else if (encode->parsed()) {
      const auto dims = pipeline.feature_dims();
      print({{"posts", pipeline.features().size()},
             {"d_joint", dims.joint},
             {"d_sem", dims.semantic},
             {"d_manip", dims.manipulation},
             {"cache", cfg.feature_cache.string()}});
    } else if (train->parsed()) {
      const auto r = pipeline.train();
      print({{"best_epoch", r.best_epoch},
             {"best_val_accuracy", r.best_val_accuracy},
             {"initial_train_loss", r.initial_train_loss},
             {"checkpoint", cfg.checkpoint_dir().string()},
             {"log", cfg.log_path().string()}});
    } else if (eval->parsed()) {
      const fs::path out = report.empty() ? cfg.output_dir / ("metrics-" + split_name + ".json") : fs::path(report);
      print(pipeline.evaluate(ckpt, parse_split_name(split_name), out).to_json());
    } else if (predict->parsed()) {
      const fs::path out = output.empty() ? cfg.output_dir / "predictions.jsonl" : fs::path(output);
      const auto preds = pipeline.predict(ckpt, input, out);
      std::size_t errors = 0;
      for (const auto& p : preds) errors += p.contains("error");
      print({{"predictions", preds.size() - errors}, {"errors", errors}, {"output", out.string()}});
    } else if (ablate->parsed()) {
      const auto b = parse_branch(branch);
      auto j = pipeline.ablate(b).to_json();
      j["masked_branch"] = std::string(to_string(b));
      print(j);
    } else if (heatmap->parsed()) {
      const auto n = per_class > 0 ? static_cast<std::size_t>(per_class) : static_cast<std::size_t>(cfg.heatmap_per_class);
      const auto r = pipeline.heatmap(ckpt, parse_split_name(split_name), n, sample_seed ? sample_seed : cfg.seed);
      print({{"samples", r.samples.size()}, {"csv", r.csv.string()}, {"png", r.png.string()}});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
