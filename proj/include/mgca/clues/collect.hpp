#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "mgca/clues/clue_set.hpp"
#include "mgca/clues/date_mentions.hpp"
#include "mgca/clues/providers.hpp"
#include "mgca/data/ingest.hpp"
#include "mgca/data/news_post.hpp"

namespace mgca {

/// Assembles the clue set of one post. `image` is null when the visual asset
/// could not be loaded; the visual clues are then absent. Never throws on
/// provider failure.
inline ClueSet collect_clues(const NewsPost& post, const Image* image, const ProviderRegistry& providers) {
  providers.require_complete();
  ClueSet c;
  c.id = post.id;
  c.textual_entities = extract_textual_entities(post.text, *providers.textual_entity).value;
  c.textual_time = extract_textual_time(post.text, post.published_at);
  if (image) {
    c.visual_entities = extract_visual_entities(*image, *providers.visual_entity).value;
    c.image_event = describe_image_event(*image, *providers.image_event).value;
    auto hit = reverse_search(*image, *providers.reverse_search).value;
    c.retrieved_title = std::move(hit.title);
    c.visual_time = hit.earliest_time;
  }
  c.temporal_gap_days = compute_temporal_gap(c.textual_time, c.visual_time);
  c.refresh_validity();
  return c;
}

/// Clue sets keyed by (post id, provider names). Readers share, writers serialize.
class ClueCache {
 public:
  ClueCache() = default;
  ClueCache(ClueCache&& o) noexcept : entries_(std::move(o.entries_)) {}

  std::optional<ClueSet> find(const std::string& id, const std::string& providers_key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find({id, providers_key});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const ClueSet& c, const std::string& providers_key) {
    std::unique_lock lock(mutex_);
    entries_[{c.id, providers_key}] = c;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  /// One JSON record per line, sorted by id; written to a temporary file first.
  void save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw Error("cannot write clue cache " + path.string());
      for (const auto& [key, clues] : entries_) {
        auto j = to_json(clues);
        j["providers"] = key.second;
        out << j.dump() << '\n';
      }
    }
    std::filesystem::rename(tmp, path);
  }

  static ClueCache load(const std::filesystem::path& path) {
    ClueCache cache;
    std::ifstream in(path);
    if (!in) throw Error("cannot open clue cache " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        cache.entries_[{j.at("id").get<std::string>(), j.value("providers", std::string())}] = clue_set_from_json(j);
      } catch (const std::exception& e) {
        throw Error("clue cache " + path.string() + " line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return cache;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, ClueSet> entries_;
};

/// Loads visual assets, runs the providers and memoizes the result.
class ClueCollector {
 public:
  ClueCollector(ProviderRegistry providers, std::filesystem::path base_dir, std::shared_ptr<ClueCache> cache = nullptr)
      : providers_(std::move(providers)),
        key_(providers_.key()),
        base_dir_(std::move(base_dir)),
        cache_(cache ? std::move(cache) : std::make_shared<ClueCache>()) {}

  ClueSet collect(const NewsPost& post) {
    if (auto hit = cache_->find(post.id, key_)) return *hit;
    std::optional<Image> image;
    try {
      image = normalize_image(load_visual(resolve_visual(base_dir_, post.visual_ref)));
    } catch (const Error&) {
    }
    provider_calls_ += image ? 4 : 1;
    ClueSet c = collect_clues(post, image ? &*image : nullptr, providers_);
    cache_->insert(c, key_);
    return c;
  }

  std::size_t provider_calls() const { return provider_calls_; }
  const std::string& providers_key() const { return key_; }
  ClueCache& cache() { return *cache_; }

 private:
  ProviderRegistry providers_;
  std::string key_;
  std::filesystem::path base_dir_;
  std::shared_ptr<ClueCache> cache_;
  std::atomic<std::size_t> provider_calls_{0};
};

}  // namespace mgca
