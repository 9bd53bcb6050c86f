#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mgca/common/error.hpp"
#include "mgca/common/rng.hpp"

namespace mgca {

/// Cosine similarity of two representations. Two zero vectors count as
/// identical (1); a zero vector against a non-zero one scores 0.
inline double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Pairwise cosine matrix; exactly symmetric with unit diagonal.
inline Eigen::MatrixXd cosine_similarity_matrix(const std::vector<Eigen::VectorXd>& reps) {
  const auto n = static_cast<Eigen::Index>(reps.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      m(i, j) = m(j, i) = cosine_similarity(reps[static_cast<std::size_t>(i)], reps[static_cast<std::size_t>(j)]);
  }
  return m;
}

struct HeatmapSample {
  std::string id;
  int cls = 0;
};

/// Draws `per_class` samples from each class in `classes`, seeded, and
/// returns them grouped in class order.
inline std::vector<HeatmapSample> select_heatmap_samples(const std::vector<HeatmapSample>& pool,
                                                         const std::vector<int>& classes, std::size_t per_class,
                                                         std::uint64_t seed,
                                                         const std::vector<std::string>& class_names = {}) {
  std::map<int, std::vector<HeatmapSample>> by_class;
  for (const auto& s : pool) by_class[s.cls].push_back(s);
  Rng rng(seed);
  std::vector<HeatmapSample> out;
  for (int c : classes) {
    auto& members = by_class[c];
    if (members.size() < per_class) {
      const std::string name =
          static_cast<std::size_t>(c) < class_names.size() ? class_names[static_cast<std::size_t>(c)] : std::to_string(c);
      throw Error("insufficient samples for class " + name + ": need " + std::to_string(per_class) + ", have " +
                  std::to_string(members.size()));
    }
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    rng.shuffle(members);
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  return out;
}

inline void write_heatmap_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                              const std::vector<HeatmapSample>& samples) {
  if (static_cast<Eigen::Index>(samples.size()) != m.rows()) throw Error("heatmap: sample count differs from matrix");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "id,class";
  for (const auto& s : samples) out << ',' << s.id;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << samples[static_cast<std::size_t>(i)].id << ',' << samples[static_cast<std::size_t>(i)].cls;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m(i, j);
    out << '\n';
  }
}

/// Renders [-1, 1] similarities with a perceptual colormap, `cell` pixels per entry.
inline void render_heatmap_png(const std::filesystem::path& path, const Eigen::MatrixXd& m, int cell = 4) {
  if (m.rows() == 0) throw Error("heatmap: empty matrix");
  cv::Mat gray(static_cast<int>(m.rows()), static_cast<int>(m.cols()), CV_8UC1);
  for (int i = 0; i < gray.rows; ++i)
    for (int j = 0; j < gray.cols; ++j)
      gray.at<unsigned char>(i, j) = cv::saturate_cast<unsigned char>((m(i, j) + 1.0) * 127.5);
  cv::Mat big, color;
  cv::resize(gray, big, cv::Size(gray.cols * cell, gray.rows * cell), 0, 0, cv::INTER_NEAREST);
  cv::applyColorMap(big, color, cv::COLORMAP_VIRIDIS);
  if (!cv::imwrite(path.string(), color)) throw Error("cannot write " + path.string());
}

}  // namespace mgca
