#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/clues/collect.hpp"
#include "mgca/clues/fixture_providers.hpp"
#include "mgca/clues/http_providers.hpp"
#include "mgca/data/ingest.hpp"
#include "mgca/data/split.hpp"
#include "mgca/encoding/bundle.hpp"
#include "mgca/encoding/fixture_encoders.hpp"
#include "mgca/encoding/http_encoders.hpp"
#include "mgca/eval/heatmap.hpp"
#include "mgca/train/config.hpp"
#include "mgca/train/trainer.hpp"

namespace mgca {

inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json phi;
  for (Branch b : kAllBranches) {
    const auto& v = p.phi[static_cast<std::size_t>(b)];
    phi[std::string(to_string(b))] = v ? nlohmann::json(*v) : nlohmann::json("masked");
  }
  nlohmann::json j{{"phi", phi}};
  if (p.y_b_hat) j["y_b_hat"] = *p.y_b_hat;
  if (p.y_hat) j["y_hat"] = *p.y_hat;
  if (!p.rep16_detect.empty()) j["rep16_detect"] = p.rep16_detect;
  if (!p.rep16_attr.empty()) j["rep16_attr"] = p.rep16_attr;
  return j;
}

struct HeatmapResult {
  Eigen::MatrixXd similarity;
  std::vector<HeatmapSample> samples;
  std::filesystem::path csv;
  std::filesystem::path png;
};

/// The end-to-end workflow behind the command-line tool. Every stage
/// materializes its inputs on demand: ingest, split, clue cache, feature
/// cache, then training or evaluation.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* log = &std::cerr) : cfg_(std::move(cfg)), log_(log) {
    if (cfg_.split_file.empty()) cfg_.split_file = cfg_.output_dir / "split.json";
    if (cfg_.clue_cache.empty()) cfg_.clue_cache = cfg_.output_dir / "clues.jsonl";
    if (cfg_.feature_cache.empty()) cfg_.feature_cache = cfg_.output_dir / "features";
  }

  const RunConfig& config() const { return cfg_; }

  /// Runs `f.operator()<S>()` with S the configured precision.
  template <typename F>
  auto dispatch(F&& f) {
    if (cfg_.precision == 64) return f.template operator()<double>();
    return f.template operator()<float>();
  }

  const Dataset& dataset() {
    if (!dataset_) {
      if (cfg_.dataset.empty()) throw Error("no dataset configured");
      dataset_ = ingest_dataset(cfg_.dataset, true);
      note("ingested " + std::to_string(dataset_->report.accepted) + " posts, rejected " +
           std::to_string(dataset_->report.rejected.size()));
    }
    return *dataset_;
  }

  const DatasetSplit& split() {
    if (!split_) {
      if (std::filesystem::exists(cfg_.split_file)) {
        split_ = DatasetSplit::load(cfg_.split_file);
      } else {
        split_ = stratified_split(dataset().posts, cfg_.split_ratios, cfg_.split_seed);
        std::filesystem::create_directories(cfg_.split_file.parent_path());
        split_->save(cfg_.split_file);
        note("wrote split " + cfg_.split_file.string());
      }
    }
    return *split_;
  }

  /// Forces a fresh split with the given ratios and seed.
  const DatasetSplit& resplit(SplitRatios ratios, std::uint64_t seed) {
    split_ = stratified_split(dataset().posts, ratios, seed);
    std::filesystem::create_directories(cfg_.split_file.parent_path());
    split_->save(cfg_.split_file);
    return *split_;
  }

  ProviderRegistry providers() {
    if (cfg_.providers == "live") return make_http_providers(HttpEndpoint::parse(cfg_.live_endpoint));
    return make_fixture_providers(fixture_table());
  }

  EncoderRegistry encoders() {
    if (cfg_.adapters == "live")
      return make_http_encoders(HttpEndpoint::parse(cfg_.live_endpoint), cfg_.d_joint, cfg_.d_sem, cfg_.d_manip);
    return make_fixture_encoders(fixture_table(), {cfg_.d_joint, cfg_.d_sem, cfg_.d_manip}, cfg_.fixture_seed);
  }

  /// Clue sets for every dataset post, through the on-disk cache.
  const std::map<std::string, ClueSet>& clues() {
    if (clues_.empty()) {
      auto cache = std::make_shared<ClueCache>(std::filesystem::exists(cfg_.clue_cache) ? ClueCache::load(cfg_.clue_cache)
                                                                                       : ClueCache());
      ClueCollector collector(providers(), dataset().base_dir, cache);
      for (const auto& p : dataset().posts) clues_.emplace(p.id, collector.collect(p));
      if (collector.provider_calls() > 0) {
        std::filesystem::create_directories(cfg_.clue_cache.parent_path());
        cache->save(cfg_.clue_cache);
        note("collected clues for " + std::to_string(clues_.size()) + " posts (" +
             std::to_string(collector.provider_calls()) + " provider calls)");
      }
    }
    return clues_;
  }

  /// Feature bundles for every dataset post, through the on-disk cache.
  const std::map<std::string, FeatureBundle>& features() {
    if (bundles_.empty()) {
      const auto& clue_sets = clues();
      std::shared_ptr<FeatureStore> store;
      if (std::filesystem::exists(cfg_.feature_cache / "manifest.json"))
        store = std::make_shared<FeatureStore>(FeatureStore::load(cfg_.feature_cache));
      FeatureBuilder builder(encoders(), dataset().base_dir, store);
      for (const auto& p : dataset().posts) bundles_.emplace(p.id, builder.build(p, clue_sets.at(p.id)));
      dims_ = builder.store().dims();
      if (builder.adapter_calls() > 0) {
        builder.store().save(cfg_.feature_cache);
        note("encoded " + std::to_string(builder.adapter_calls()) + " posts");
      }
    }
    return bundles_;
  }

  FeatureDims feature_dims() {
    features();
    return dims_;
  }

  ModelConfig model_config() {
    ModelConfig m;
    m.dims = feature_dims();
    m.d_out = cfg_.d_out;
    m.d_t = cfg_.d_t;
    m.hidden = cfg_.hidden;
    m.rep = cfg_.rep;
    m.share_compare = cfg_.share_compare;
    m.stop_gradient_gates = cfg_.stop_gradient_gates;
    return m;
  }

  LabeledSet labeled(SplitName which) {
    const auto& bundles = features();
    std::map<std::string, const NewsPost*> posts;
    for (const auto& p : dataset().posts) posts.emplace(p.id, &p);
    LabeledSet s;
    for (const auto& id : split().ids(which)) {
      auto it = posts.find(id);
      if (it == posts.end()) throw Error("split references unknown post " + id);
      const NewsPost& p = *it->second;
      if (!p.label_binary) throw Error("post " + id + " has no label");
      s.bundles.push_back(&bundles.at(id));
      s.y_b.push_back(*p.label_binary);
      if (p.label_attribution) s.y.push_back(*p.label_attribution);
    }
    if (!s.y.empty() && s.y.size() != s.size()) s.y.clear();
    return s;
  }

  template <typename S>
  TrainResult train(const BranchMask& mask, const std::filesystem::path& out_dir) {
    MgcaModel<S> model(model_config(), cfg_.task, cfg_.seed);
    if (!cfg_.warm_start.empty()) {
      auto report = load_checkpoint(model, cfg_.warm_start);
      for (const auto& w : report.warnings) note("warning: " + w);
    }
    TrainOptions opt;
    opt.epochs = cfg_.epochs;
    opt.batch_size = cfg_.batch_size;
    opt.learning_rate = cfg_.learning_rate;
    opt.seed = cfg_.seed;
    opt.mask = mask;
    opt.log_path = out_dir / "train_log.jsonl";
    opt.checkpoint_dir = out_dir / "checkpoint";
    auto train_set = labeled(SplitName::train);
    auto val_set = labeled(SplitName::val);
    auto result = train_model(model, train_set, val_set, opt);
    nlohmann::json summary{{"task", std::string(to_string(cfg_.task))},
                           {"branch_mask", mask.to_string()},
                           {"epochs", cfg_.epochs},
                           {"initial_train_loss", result.initial_train_loss},
                           {"best_epoch", result.best_epoch},
                           {"best_val_accuracy", result.best_val_accuracy}};
    std::ofstream(out_dir / "train_summary.json") << summary.dump(2) << '\n';
    note("best validation accuracy " + std::to_string(result.best_val_accuracy) + " at epoch " +
         std::to_string(result.best_epoch));
    return result;
  }

  TrainResult train() { return dispatch([&]<typename S>() { return train<S>(cfg_.branch_mask, cfg_.output_dir); }); }

  template <typename S>
  MetricsReport evaluate(const std::filesystem::path& checkpoint, SplitName which,
                         const std::filesystem::path& report_path = {}) {
    auto model = load_model<S>(checkpoint);
    const auto mask = read_checkpoint_manifest(checkpoint).mask;
    auto result = evaluate_model(model, labeled(which), mask);
    if (!report_path.empty()) {
      if (report_path.has_parent_path()) std::filesystem::create_directories(report_path.parent_path());
      std::ofstream(report_path) << result.metrics.to_json().dump(2) << '\n';
    }
    return result.metrics;
  }

  MetricsReport evaluate(const std::filesystem::path& checkpoint, SplitName which,
                         const std::filesystem::path& report_path = {}) {
    return dispatch([&]<typename S>() { return evaluate<S>(checkpoint, which, report_path); });
  }

  /// Trains with `branch` disabled (on top of the configured mask) and
  /// evaluates the best checkpoint on the test split.
  MetricsReport ablate(Branch branch) {
    BranchMask mask = cfg_.branch_mask;
    mask.disable(branch);
    const auto dir = cfg_.output_dir / ("ablate-" + std::string(to_string(branch)));
    return dispatch([&]<typename S>() {
      train<S>(mask, dir);
      return evaluate<S>(dir / "checkpoint", SplitName::test, dir / "metrics.json");
    });
  }

  /// Predictions for the posts in `input`, written as JSONL to `output`.
  /// Posts that cannot be processed produce an entry with an "error" field.
  std::vector<nlohmann::json> predict(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                                      const std::filesystem::path& output = {}) {
    return dispatch([&]<typename S>() { return predict<S>(checkpoint, input, output); });
  }

  template <typename S>
  std::vector<nlohmann::json> predict(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                                      const std::filesystem::path& output) {
    auto model = load_model<S>(checkpoint);
    const auto mask = read_checkpoint_manifest(checkpoint).mask;
    const Dataset ds = ingest_dataset(input, false);
    std::vector<nlohmann::json> out;
    for (const auto& issue : ds.report.rejected)
      out.push_back({{"id", issue.id}, {"line", issue.line}, {"error", issue.reason}});
    ClueCollector collector(providers(), ds.base_dir);
    FeatureBuilder builder(encoders(), ds.base_dir);
    for (const auto& post : ds.posts) {
      try {
        if (!visual_decodable(ds.resolve(post))) throw Error("visual asset unreadable: " + post.visual_ref);
        const FeatureBundle b = builder.build(post, collector.collect(post));
        auto batch = make_batch<S>(std::vector<const FeatureBundle*>{&b}, model.config().dims, {0}, {0});
        auto j = to_json(model.predict(batch, mask).front());
        j["id"] = post.id;
        out.push_back(std::move(j));
      } catch (const std::exception& e) {
        out.push_back({{"id", post.id}, {"error", e.what()}});
      }
    }
    if (!output.empty()) {
      if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
      std::ofstream f(output);
      for (const auto& j : out) f << j.dump() << '\n';
    }
    return out;
  }

  HeatmapResult heatmap(const std::filesystem::path& checkpoint, SplitName which, std::size_t per_class,
                        std::uint64_t seed) {
    return dispatch([&]<typename S>() { return heatmap<S>(checkpoint, which, per_class, seed); });
  }

  /// Cosine similarities between the penultimate representations of the
  /// checkpoint's task head, `per_class` random posts per class, grouped by class.
  template <typename S>
  HeatmapResult heatmap(const std::filesystem::path& checkpoint, SplitName which, std::size_t per_class,
                        std::uint64_t seed) {
    auto model = load_model<S>(checkpoint);
    const auto mask = read_checkpoint_manifest(checkpoint).mask;
    const auto data = labeled(which);
    const bool detect = model.task() == Task::detect;
    if (!detect && data.y.size() != data.size()) throw Error("heatmap needs attribution labels");

    std::vector<HeatmapSample> pool;
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < data.size(); ++i) {
      pool.push_back({data.bundles[i]->id, detect ? data.y_b[i] : data.y[i]});
      row_of[data.bundles[i]->id] = i;
    }
    std::vector<int> classes;
    std::vector<std::string> names;
    for (int c = 0; c < (detect ? 2 : kNumAttributionClasses); ++c) {
      classes.push_back(c);
      names.push_back(detect ? (c ? "fake" : "real") : std::string(kAttributionNames[static_cast<std::size_t>(c)]));
    }
    HeatmapResult r;
    r.samples = select_heatmap_samples(pool, classes, per_class, seed, names);

    std::vector<const FeatureBundle*> chosen;
    for (const auto& s : r.samples) chosen.push_back(data.bundles[row_of.at(s.id)]);
    std::vector<int> zeros(chosen.size(), 0);
    auto preds = model.predict(make_batch<S>(chosen, model.config().dims, zeros, zeros), mask);
    std::vector<Eigen::VectorXd> reps;
    for (const auto& p : preds) {
      const auto& v = detect ? p.rep16_detect : p.rep16_attr;
      reps.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    r.similarity = cosine_similarity_matrix(reps);
    std::filesystem::create_directories(cfg_.output_dir);
    r.csv = cfg_.output_dir / "heatmap.csv";
    r.png = cfg_.output_dir / "heatmap.png";
    write_heatmap_csv(r.csv, r.similarity, r.samples);
    render_heatmap_png(r.png, r.similarity);
    return r;
  }

  template <typename S>
  MgcaModel<S> load_model(const std::filesystem::path& checkpoint) {
    const auto manifest = read_checkpoint_manifest(checkpoint);
    if (manifest.task != cfg_.task)
      throw Error("checkpoint task " + std::string(to_string(manifest.task)) + " does not match configured task " +
                  std::string(to_string(cfg_.task)));
    MgcaModel<S> model(model_config(), cfg_.task, manifest.seed);
    auto report = load_checkpoint(model, checkpoint);
    for (const auto& w : report.warnings) note("warning: " + w);
    return model;
  }

 private:
  std::shared_ptr<const FixtureClueTable> fixture_table() {
    if (!table_) {
      if (cfg_.fixture_table.empty())
        table_ = std::make_shared<FixtureClueTable>();
      else
        table_ = FixtureClueTable::load(cfg_.fixture_table);
    }
    return table_;
  }

  void note(const std::string& msg) {
    if (log_) *log_ << msg << '\n';
  }

  RunConfig cfg_;
  std::ostream* log_;
  std::optional<Dataset> dataset_;
  std::optional<DatasetSplit> split_;
  std::shared_ptr<const FixtureClueTable> table_;
  std::map<std::string, ClueSet> clues_;
  std::map<std::string, FeatureBundle> bundles_;
  FeatureDims dims_;
};

}  // namespace mgca
