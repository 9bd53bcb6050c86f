#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/data/news_post.hpp"
#include "mgca/model/branch.hpp"

namespace mgca {

/// K x K counts, rows = true class, columns = predicted class.
using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;

inline ConfusionMatrix confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted, int k) {
  if (truth.size() != predicted.size()) throw Error("confusion matrix: label and prediction counts differ");
  ConfusionMatrix m(static_cast<std::size_t>(k), std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
      throw Error("confusion matrix: class index out of range");
    ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return m;
}

struct ClassMetrics {
  int cls = 0;
  std::string name;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::int64_t support = 0;
};

struct MetricsReport {
  Task task = Task::detect;
  std::int64_t count = 0;
  double accuracy = 0;
  double f1 = 0;                     // macro over classes
  std::optional<double> binary_f1;   // detect: F1 of the fake class
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion;

  nlohmann::json to_json() const {
    nlohmann::json pc = nlohmann::json::array();
    for (const auto& c : per_class)
      pc.push_back({{"class", c.cls},
                    {"name", c.name},
                    {"precision", c.precision},
                    {"recall", c.recall},
                    {"f1", c.f1},
                    {"support", c.support}});
    nlohmann::json j{{"task", std::string(to_string(task))},
                     {"count", count},
                     {"accuracy", accuracy},
                     {"f1", f1},
                     {"f1_average", "macro"},
                     {"per_class", pc},
                     {"confusion", confusion}};
    if (binary_f1) j["binary_f1"] = *binary_f1;
    return j;
  }
};

namespace detail {

inline double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

/// Everything is derived from the confusion matrix; empty denominators give 0.
inline MetricsReport metrics_from_confusion(const ConfusionMatrix& m, Task task) {
  const std::size_t k = m.size();
  for (const auto& row : m)
    if (row.size() != k) throw Error("confusion matrix must be square");
  MetricsReport r;
  r.task = task;
  r.confusion = m;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < k; ++i) {
    correct += m[i][i];
    for (std::size_t j = 0; j < k; ++j) r.count += m[i][j];
  }
  r.accuracy = detail::ratio(correct, r.count);

  double f1_sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::int64_t predicted = 0, actual = 0;
    for (std::size_t i = 0; i < k; ++i) {
      predicted += m[i][c];
      actual += m[c][i];
    }
    ClassMetrics cm;
    cm.cls = static_cast<int>(c);
    if (task == Task::attribute && k == static_cast<std::size_t>(kNumAttributionClasses))
      cm.name = std::string(kAttributionNames[c]);
    else
      cm.name = k == 2 ? (c == 0 ? "real" : "fake") : std::to_string(c);
    cm.precision = detail::ratio(m[c][c], predicted);
    cm.recall = detail::ratio(m[c][c], actual);
    cm.f1 = cm.precision + cm.recall == 0 ? 0.0 : 2 * cm.precision * cm.recall / (cm.precision + cm.recall);
    cm.support = actual;
    f1_sum += cm.f1;
    r.per_class.push_back(std::move(cm));
  }
  r.f1 = k == 0 ? 0.0 : f1_sum / static_cast<double>(k);
  if (task == Task::detect && k == 2) r.binary_f1 = r.per_class[1].f1;
  return r;
}

inline MetricsReport compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, Task task) {
  return metrics_from_confusion(confusion_matrix(truth, predicted, task == Task::detect ? 2 : kNumAttributionClasses),
                                task);
}

}  // namespace mgca
