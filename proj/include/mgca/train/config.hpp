#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "json.hpp"
#include "mgca/data/split.hpp"
#include "mgca/model/branch.hpp"

namespace mgca {

/// Run settings, read from a flat `key = value` file (TOML subset: one
/// key per line, `#` comments, optional double quotes around strings).
/// Relative paths resolve against the config file's directory.
struct RunConfig {
  Task task = Task::detect;
  int batch_size = 64;
  double learning_rate = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 42;
  BranchMask branch_mask;
  int precision = 32;

  int d_out = 256;
  int d_t = 1;
  int hidden = 256;
  int rep = 16;
  bool share_compare = false;
  bool stop_gradient_gates = false;

  SplitRatios split_ratios;
  std::uint64_t split_seed = 42;

  std::string providers = "fixture";  // fixture | live
  std::string adapters = "fixture";   // fixture | live
  std::string live_endpoint = "http://127.0.0.1:8080";
  int d_joint = 512;
  int d_sem = 768;
  int d_manip = 256;
  std::uint64_t fixture_seed = 0x4d474341;

  std::filesystem::path dataset;
  std::filesystem::path fixture_table;
  std::filesystem::path split_file;
  std::filesystem::path clue_cache;
  std::filesystem::path feature_cache;
  std::filesystem::path output_dir = "runs";
  std::filesystem::path warm_start;

  int heatmap_per_class = 90;

  std::filesystem::path checkpoint_dir() const { return output_dir / "checkpoint"; }
  std::filesystem::path log_path() const { return output_dir / "train_log.jsonl"; }

  /// Sets one key from its textual value; paths resolve against `base`.
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {});

  static RunConfig load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

/// Strips a trailing `#` comment that is not inside quotes.
inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>)
      out = static_cast<T>(std::stod(v, &used));
    else if constexpr (std::is_unsigned_v<T>)
      out = static_cast<T>(std::stoull(v, &used, 0));
    else
      out = static_cast<T>(std::stoll(v, &used, 0));
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error("config: invalid value for " + key + ": \"" + v + "\"");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config: invalid boolean for " + key + ": \"" + v + "\"");
}

inline SplitRatios parse_ratios(const std::string& v) {
  SplitRatios r;
  std::string s = v;
  if (!s.empty() && s.front() == '[') s = s.substr(1, s.size() - 2);
  double parts[3];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const auto comma = s.find(',', start);
    if ((i < 2) == (comma == std::string::npos)) throw Error("split ratios must be three comma-separated fractions");
    parts[i] = parse_number<double>("split_ratios", trim(s.substr(start, comma - start)));
    start = comma + 1;
  }
  r.train = parts[0];
  r.val = parts[1];
  r.test = parts[2];
  return r;
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& raw, const std::filesystem::path& base) {
  using namespace detail;
  const std::string v = unquote(trim(raw));
  auto path = [&]() -> std::filesystem::path {
    std::filesystem::path p(v);
    return p.empty() || p.is_absolute() || base.empty() ? p : base / p;
  };
  if (key == "task") task = parse_task(v);
  else if (key == "batch_size") batch_size = parse_number<int>(key, v);
  else if (key == "learning_rate") learning_rate = parse_number<double>(key, v);
  else if (key == "epochs") epochs = parse_number<int>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "branch_mask") branch_mask = BranchMask::parse(v);
  else if (key == "precision") precision = parse_number<int>(key, v);
  else if (key == "d_out") d_out = parse_number<int>(key, v);
  else if (key == "d_t") d_t = parse_number<int>(key, v);
  else if (key == "hidden") hidden = parse_number<int>(key, v);
  else if (key == "rep") rep = parse_number<int>(key, v);
  else if (key == "share_compare") share_compare = parse_bool(key, v);
  else if (key == "stop_gradient_gates") stop_gradient_gates = parse_bool(key, v);
  else if (key == "split_ratios") split_ratios = parse_ratios(v);
  else if (key == "split_seed") split_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "providers") providers = v;
  else if (key == "adapters") adapters = v;
  else if (key == "live_endpoint") live_endpoint = v;
  else if (key == "d_joint") d_joint = parse_number<int>(key, v);
  else if (key == "d_sem") d_sem = parse_number<int>(key, v);
  else if (key == "d_manip") d_manip = parse_number<int>(key, v);
  else if (key == "fixture_seed") fixture_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "dataset") dataset = path();
  else if (key == "fixture_table") fixture_table = path();
  else if (key == "split_file") split_file = path();
  else if (key == "clue_cache") clue_cache = path();
  else if (key == "feature_cache") feature_cache = path();
  else if (key == "output_dir") output_dir = path();
  else if (key == "warm_start") warm_start = path();
  else if (key == "heatmap_per_class") heatmap_per_class = parse_number<int>(key, v);
  else throw Error("config: unknown key \"" + key + "\"");

  if (batch_size < 1) throw Error("config: batch_size must be positive");
  if (epochs < 0) throw Error("config: epochs must be non-negative");
  if (precision != 32 && precision != 64) throw Error("config: precision must be 32 or 64");
  if (providers != "fixture" && providers != "live") throw Error("config: providers must be fixture or live");
  if (adapters != "fixture" && adapters != "live") throw Error("config: adapters must be fixture or live");
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  const auto base = path.parent_path();
  RunConfig c;
  c.output_dir = base / c.output_dir;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config " + path.string() + " line " + std::to_string(lineno) + ": expected key = value");
    c.set(detail::trim(line.substr(0, eq)), line.substr(eq + 1), base);
  }
  return c;
}

inline nlohmann::json RunConfig::to_json() const {
  return {{"task", std::string(to_string(task))},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"seed", seed},
          {"branch_mask", branch_mask.to_string()},
          {"precision", precision},
          {"d_out", d_out},
          {"d_t", d_t},
          {"hidden", hidden},
          {"rep", rep},
          {"share_compare", share_compare},
          {"stop_gradient_gates", stop_gradient_gates},
          {"split_ratios", {split_ratios.train, split_ratios.val, split_ratios.test}},
          {"split_seed", split_seed},
          {"providers", providers},
          {"adapters", adapters},
          {"dataset", dataset.string()},
          {"output_dir", output_dir.string()}};
}

}  // namespace mgca
