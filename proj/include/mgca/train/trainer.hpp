#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/eval/metrics.hpp"
#include "mgca/model/checkpoint.hpp"
#include "mgca/nn/adam.hpp"

namespace mgca {

/// Encoded posts with their targets.
struct LabeledSet {
  std::vector<const FeatureBundle*> bundles;
  std::vector<int> y_b;
  std::vector<int> y;

  std::size_t size() const { return bundles.size(); }
};

struct TrainOptions {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 42;  // batch order
  BranchMask mask;
  std::filesystem::path log_path;        // empty: no log file
  std::filesystem::path checkpoint_dir;  // empty: keep the best weights in memory only
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  // mean of the batch losses seen while training
  double val_loss = 0;
  double val_accuracy = 0;
  double val_f1 = 0;

  nlohmann::json to_json() const {
    return {{"epoch", epoch},
            {"train_loss", train_loss},
            {"val_loss", val_loss},
            {"val_accuracy", val_accuracy},
            {"val_f1", val_f1}};
  }
};

struct TrainResult {
  double initial_train_loss = 0;  // evaluation-mode loss before the first step
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_accuracy = 0;
};

struct EvalResult {
  double loss = 0;
  std::vector<int> predicted;
  std::vector<Prediction> predictions;
  MetricsReport metrics;
};

template <typename S>
Batch<S> make_batch(const LabeledSet& data, const std::vector<std::size_t>& rows, const FeatureDims& dims) {
  std::vector<const FeatureBundle*> b;
  std::vector<int> y_b, y;
  for (auto r : rows) {
    b.push_back(data.bundles[r]);
    y_b.push_back(data.y_b[r]);
    if (!data.y.empty()) y.push_back(data.y[r]);
  }
  return make_batch<S>(b, dims, std::move(y_b), std::move(y));
}

inline int predicted_class(const Prediction& p) {
  if (p.y_b_hat) return *p.y_b_hat >= 0.5 ? 1 : 0;
  const auto& y = *p.y_hat;
  return static_cast<int>(std::max_element(y.begin(), y.end()) - y.begin());
}

/// Evaluation-mode loss, predictions and metrics over `data`, in chunks of `chunk` rows.
template <typename S>
EvalResult evaluate_model(MgcaModel<S>& model, const LabeledSet& data, const BranchMask& mask,
                          std::size_t chunk = 256) {
  if (data.size() == 0) throw Error("cannot evaluate on an empty split");
  EvalResult r;
  double loss_sum = 0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    std::vector<std::size_t> rows;
    for (std::size_t i = start; i < std::min(data.size(), start + chunk); ++i) rows.push_back(i);
    auto batch = make_batch<S>(data, rows, model.config().dims);
    auto fp = model.forward(batch, false, mask);
    loss_sum += model.loss(fp, batch, mask).total * static_cast<double>(rows.size());
    for (auto& p : model.predict(batch, mask)) {
      r.predicted.push_back(predicted_class(p));
      r.predictions.push_back(std::move(p));
    }
  }
  r.loss = loss_sum / static_cast<double>(data.size());
  r.metrics = compute_metrics(model.task() == Task::detect ? data.y_b : data.y, r.predicted, model.task());
  return r;
}

/// Mini-batch Adam on L_b (detect) or L (attribute). Deterministic for a
/// fixed model seed and options. Keeps the weights of the epoch with the
/// best validation accuracy (earliest on ties) in `model` and, when
/// configured, in `checkpoint_dir`.
template <typename S>
TrainResult train_model(MgcaModel<S>& model, const LabeledSet& train, const LabeledSet& val, const TrainOptions& opt) {
  if (train.size() == 0) throw Error("training split is empty");
  if (val.size() == 0) throw Error("validation split is empty");
  if (model.task() == Task::attribute && (train.y.size() != train.size() || val.y.size() != val.size()))
    throw Error("attribution training needs attribution labels");

  TrainResult result;
  result.initial_train_loss = evaluate_model(model, train, opt.mask).loss;

  std::optional<std::ofstream> log;
  if (!opt.log_path.empty()) {
    if (opt.log_path.has_parent_path()) std::filesystem::create_directories(opt.log_path.parent_path());
    log.emplace(opt.log_path, std::ios::binary | std::ios::trunc);
    if (!*log) throw Error("cannot write training log " + opt.log_path.string());
  }

  auto snapshot = [&](int epoch) {
    if (!opt.checkpoint_dir.empty()) save_checkpoint(model, opt.checkpoint_dir, epoch, opt.mask);
  };
  std::vector<nn::Matrix<S>> best;
  auto capture = [&] {
    best.clear();
    for (auto* p : model.parameters()) best.push_back(p->value);
    for (auto* b : model.buffers()) best.push_back(b->value);
  };
  auto restore = [&] {
    std::size_t i = 0;
    for (auto* p : model.parameters()) p->value = best[i++];
    for (auto* b : model.buffers()) b->value = best[i++];
  };

  snapshot(0);
  capture();
  result.best_val_accuracy = -1;

  typename nn::Adam<S>::Options adam_opt;
  adam_opt.lr = static_cast<S>(opt.learning_rate);
  nn::Adam<S> adam(model.parameters(), adam_opt);
  Rng order_rng(opt.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto bs = static_cast<std::size_t>(opt.batch_size);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_index) {
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bs)));
      auto batch = make_batch<S>(train, rows, model.config().dims);
      adam.zero_grad();
      const auto report = model.loss_and_grad(batch, opt.mask, true);
      if (!std::isfinite(report.total))
        throw Error("non-finite loss in epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) +
                    " (first post " + train.bundles[rows.front()]->id + ")");
      adam.step();
      loss_sum += report.total * static_cast<double>(rows.size());
    }

    const auto ev = evaluate_model(model, val, opt.mask);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()), ev.loss, ev.metrics.accuracy, ev.metrics.f1};
    result.log.push_back(rec);
    if (log) {
      *log << rec.to_json().dump() << '\n';
      log->flush();
    }
    if (ev.metrics.accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = ev.metrics.accuracy;
      result.best_epoch = epoch;
      capture();
      snapshot(epoch);
    }
  }
  if (opt.epochs == 0) result.best_val_accuracy = evaluate_model(model, val, opt.mask).metrics.accuracy;
  restore();
  return result;
}

}  // namespace mgca
