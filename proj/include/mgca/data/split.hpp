#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/common/rng.hpp"
#include "mgca/data/news_post.hpp"

namespace mgca {

enum class SplitName { train = 0, val = 1, test = 2 };

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<std::string> train, val, test;
  std::uint64_t seed = 0;
  std::map<int, std::array<std::size_t, 3>> strata;  // class -> {train, val, test}

  const std::vector<std::string>& ids(SplitName s) const {
    switch (s) {
      case SplitName::train: return train;
      case SplitName::val: return val;
      default: return test;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json strata_json = nlohmann::json::object();
    for (const auto& [cls, counts] : strata) strata_json[std::to_string(cls)] = counts;
    return {{"seed", seed}, {"train", train}, {"val", val}, {"test", test}, {"strata", strata_json}};
  }

  static DatasetSplit from_json(const nlohmann::json& j) {
    DatasetSplit s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    if (auto it = j.find("strata"); it != j.end())
      for (const auto& [k, v] : it->items()) s.strata[std::stoi(k)] = v.get<std::array<std::size_t, 3>>();
    return s;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write split manifest " + path.string());
    out << to_json().dump(2) << '\n';
  }

  static DatasetSplit load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split manifest " + path.string());
    return from_json(nlohmann::json::parse(in));
  }
};

inline SplitName parse_split_name(std::string_view s) {
  if (s == "train") return SplitName::train;
  if (s == "val") return SplitName::val;
  if (s == "test") return SplitName::test;
  throw Error("unknown split \"" + std::string(s) + "\" (expected train, val or test)");
}

namespace detail {

/// Integer allocation table x[c][s] whose entries are floor or ceil of the
/// proportional targets n_s * n_c / N and whose row and column sums are exact.
///
/// Rounding up is a 0/1 transportation problem: class c must round up r_c of
/// its cells, split s must absorb k_s round-ups, and only cells with a
/// fractional target may round up. The fractional parts themselves are a
/// feasible fractional solution, so an integral one exists; it is found with
/// augmenting paths on the class/split bipartite graph.
inline std::vector<std::array<std::size_t, 3>> controlled_rounding(const std::vector<std::size_t>& class_sizes,
                                                                   const std::array<std::size_t, 3>& split_sizes) {
  const std::size_t total = [&] {
    std::size_t t = 0;
    for (auto n : class_sizes) t += n;
    return t;
  }();
  const std::size_t k = class_sizes.size();
  std::vector<std::array<std::size_t, 3>> x(k);
  std::vector<std::array<bool, 3>> fractional(k);
  std::vector<std::array<std::uint64_t, 3>> remainder(k);
  std::vector<long> row_need(k);
  std::array<long, 3> col_need{};
  for (std::size_t s = 0; s < 3; ++s) col_need[s] = static_cast<long>(split_sizes[s]);

  for (std::size_t c = 0; c < k; ++c) {
    long used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const std::uint64_t num = static_cast<std::uint64_t>(split_sizes[s]) * class_sizes[c];
      x[c][s] = static_cast<std::size_t>(num / total);
      remainder[c][s] = num % total;
      fractional[c][s] = remainder[c][s] != 0;
      used += static_cast<long>(x[c][s]);
      col_need[s] -= static_cast<long>(x[c][s]);
    }
    row_need[c] = static_cast<long>(class_sizes[c]) - used;
  }

  // up[c][s]: cell rounded up.
  std::vector<std::array<bool, 3>> up(k, {false, false, false});

  // Greedy pass, largest remainders first.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t s = 0; s < 3; ++s)
      if (fractional[c][s]) cells.emplace_back(c, s);
  std::stable_sort(cells.begin(), cells.end(), [&](auto a, auto b) {
    return remainder[a.first][a.second] > remainder[b.first][b.second];
  });
  std::vector<long> row_left = row_need;
  std::array<long, 3> col_left = col_need;
  for (auto [c, s] : cells) {
    if (row_left[c] > 0 && col_left[s] > 0) {
      up[c][s] = true;
      --row_left[c];
      --col_left[s];
    }
  }

  // Augment: path alternates class -> split (unused cell) -> class (used cell).
  auto augment = [&](std::size_t start) {
    std::vector<bool> seen_split(3, false);
    std::vector<bool> seen_class(k, false);
    std::function<bool(std::size_t)> dfs = [&](std::size_t c) -> bool {
      seen_class[c] = true;
      for (std::size_t s = 0; s < 3; ++s) {
        if (!fractional[c][s] || up[c][s] || seen_split[s]) continue;
        seen_split[s] = true;
        if (col_left[s] > 0) {
          up[c][s] = true;
          --col_left[s];
          return true;
        }
        for (std::size_t c2 = 0; c2 < k; ++c2) {
          if (seen_class[c2] || !up[c2][s]) continue;
          up[c2][s] = false;
          up[c][s] = true;
          if (dfs(c2)) return true;
          up[c][s] = false;
          up[c2][s] = true;
        }
      }
      return false;
    };
    return dfs(start);
  };
  for (std::size_t c = 0; c < k; ++c) {
    while (row_left[c] > 0) {
      if (!augment(c)) throw Error("stratified split: no consistent allocation");
      --row_left[c];
    }
  }

  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t s = 0; s < 3; ++s)
      if (up[c][s]) ++x[c][s];
  return x;
}

}  // namespace detail

/// Splits posts into train/val/test preserving per-class proportions.
///
/// Split totals are round(N * ratio) for val and test, remainder to train.
/// Within each split every class receives floor or ceil of its proportional
/// share, so each class deviates from the global proportion by less than one
/// sample in every split.
inline DatasetSplit stratified_split(const std::vector<NewsPost>& posts, SplitRatios ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) throw Error("split ratios must sum to 1");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) throw Error("split ratios must be non-negative");

  std::map<int, std::vector<std::string>> by_class;
  for (const auto& p : posts) {
    if (!p.label_attribution) throw Error("post " + p.id + " has no label_attribution; cannot stratify");
    by_class[*p.label_attribution].push_back(p.id);
  }
  for (const auto& [cls, ids] : by_class)
    if (ids.size() < 3) throw Error("class too small to stratify: class " + std::to_string(cls));

  const std::size_t n = posts.size();
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.val));
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.test));
  if (n_val + n_test > n) throw Error("split ratios leave no room for train");
  const std::array<std::size_t, 3> totals{n - n_val - n_test, n_val, n_test};

  std::vector<std::size_t> sizes;
  for (const auto& [cls, ids] : by_class) sizes.push_back(ids.size());
  const auto alloc = detail::controlled_rounding(sizes, totals);

  DatasetSplit out;
  out.seed = seed;
  Rng rng(seed);
  std::size_t ci = 0;
  for (auto& [cls, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    const auto& a = alloc[ci++];
    auto it = ids.begin();
    out.train.insert(out.train.end(), it, it + static_cast<long>(a[0]));
    it += static_cast<long>(a[0]);
    out.val.insert(out.val.end(), it, it + static_cast<long>(a[1]));
    it += static_cast<long>(a[1]);
    out.test.insert(out.test.end(), it, it + static_cast<long>(a[2]));
    out.strata[cls] = a;
  }
  rng.shuffle(out.train);
  rng.shuffle(out.val);
  rng.shuffle(out.test);
  return out;
}

}  // namespace mgca
