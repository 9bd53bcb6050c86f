#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "mgca/data/news_post.hpp"
#include "mgca/data/visual.hpp"

namespace mgca {

struct IngestIssue {
  std::size_t line = 0;  // 1-based
  std::string id;        // empty when the record could not be parsed
  std::string reason;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::vector<IngestIssue> rejected;
  std::vector<IngestIssue> flagged;  // accepted, but the visual asset did not decode

  nlohmann::json to_json() const {
    auto issues = [](const std::vector<IngestIssue>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& i : v) a.push_back({{"line", i.line}, {"id", i.id}, {"reason", i.reason}});
      return a;
    };
    return {{"accepted", accepted}, {"rejected", issues(rejected)}, {"flagged", issues(flagged)}};
  }
};

/// Resolves a visual reference against the directory that holds the dataset file.
inline std::filesystem::path resolve_visual(const std::filesystem::path& base_dir, const std::string& visual_ref) {
  std::filesystem::path ref(visual_ref);
  return ref.is_absolute() ? ref : base_dir / ref;
}

struct Dataset {
  std::vector<NewsPost> posts;
  IngestReport report;
  std::filesystem::path base_dir;  // visual_ref values resolve relative to this

  std::filesystem::path resolve(const NewsPost& p) const { return resolve_visual(base_dir, p.visual_ref); }
};

/// Reads a JSONL post file. Blank lines are skipped. With `schema_check` a
/// post whose visual asset does not decode is rejected; without it the post
/// is kept and listed under `flagged`.
inline Dataset ingest_dataset(const std::filesystem::path& path, bool schema_check = true) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());

  Dataset ds;
  ds.base_dir = path.parent_path();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (normalize_whitespace(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      ds.report.rejected.push_back({lineno, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    NewsPost post;
    try {
      post = post_from_json(j);
    } catch (const Error& e) {
      std::string id = j.is_object() && j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "";
      ds.report.rejected.push_back({lineno, id, e.what()});
      continue;
    }
    if (!seen.insert(post.id).second) {
      ds.report.rejected.push_back({lineno, post.id, "duplicate id"});
      continue;
    }
    if (!visual_decodable(resolve_visual(ds.base_dir, post.visual_ref))) {
      if (schema_check) {
        ds.report.rejected.push_back({lineno, post.id, "visual asset unreadable"});
        continue;
      }
      ds.report.flagged.push_back({lineno, post.id, "visual asset unreadable"});
    }
    ds.posts.push_back(std::move(post));
  }
  ds.report.accepted = ds.posts.size();
  return ds;
}

inline void write_posts(const std::filesystem::path& path, const std::vector<NewsPost>& posts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : posts) out << to_json(p).dump() << '\n';
}

}  // namespace mgca
