#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/clues/providers.hpp"

namespace mgca {

/// Capitalized-token entity extractor.
///
/// Tokens are maximal runs of ASCII letters, digits, '-' and '\''. A token is
/// an entity word when it starts with an uppercase letter, has at least two
/// characters and is not a stopword, month or weekday. Entity words separated
/// only by whitespace merge into one multi-word entity. A trailing "'s" is
/// dropped.
class FixtureTextualEntityProvider final : public TextualEntityProvider {
 public:
  std::string name() const override { return "fixture-textual-entity"; }
  bool deterministic() const override { return true; }

  std::vector<std::string> entities(std::string_view text) const override {
    std::vector<std::string> out;
    std::string current;
    bool only_space_since_last = false;
    std::size_t i = 0;
    auto flush = [&] {
      if (!current.empty()) out.push_back(current);
      current.clear();
    };
    while (i < text.size()) {
      if (!is_token_char(text[i])) {
        if (!std::isspace(static_cast<unsigned char>(text[i]))) only_space_since_last = false;
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < text.size() && is_token_char(text[j])) ++j;
      std::string token(text.substr(i, j - i));
      if (token.size() > 2 && token.compare(token.size() - 2, 2, "'s") == 0) token.resize(token.size() - 2);
      if (is_entity_word(token)) {
        if (!current.empty() && only_space_since_last) {
          current += ' ';
          current += token;
        } else {
          flush();
          current = token;
        }
        only_space_since_last = true;
      } else {
        flush();
        only_space_since_last = false;
      }
      i = j;
    }
    flush();
    return out;
  }

 private:
  static bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'';
  }

  static bool is_entity_word(const std::string& token) {
    if (token.size() < 2 || token[0] < 'A' || token[0] > 'Z') return false;
    std::string lower;
    for (char c : token) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static const std::set<std::string> kStop{
        "the",     "a",       "an",       "this",    "that",     "these",    "those",   "in",       "on",
        "at",      "of",      "for",      "and",     "or",       "but",      "to",      "from",     "by",
        "with",    "after",   "before",   "during",  "breaking", "new",      "video",   "photo",    "image",
        "watch",   "just",    "today",    "yesterday", "it",     "its",      "he",      "she",      "they",
        "we",      "you",     "is",       "are",     "was",      "were",     "be",      "as",       "no",
        "not",     "all",     "some",     "why",     "how",      "what",     "when",    "where",    "who",
        "january", "february", "march",   "april",   "may",      "june",     "july",    "august",   "september",
        "october", "november", "december", "jan",    "feb",      "mar",      "apr",     "jun",      "jul",
        "aug",     "sep",     "sept",     "oct",     "nov",      "dec",      "monday",  "tuesday",  "wednesday",
        "thursday", "friday", "saturday", "sunday"};
    return !kStop.contains(lower);
  }
};

/// Per-image fixture record, keyed by the hex content hash of the decoded pixels.
struct FixtureImageRecord {
  std::vector<VisualEntity> visual_entities;
  std::string event;
  ReverseSearchHit reverse;
  std::string manipulation = "pristine";
};

/// Lookup table behind the image-keyed fixture providers and the fixture
/// manipulation encoder. File layout:
///   {"images": {"<hash>": {"visual_entities": [{"name": ..., "category": ...}],
///                          "event": ..., "reverse_search": {"time": ..., "title": ...},
///                          "manipulation": ...}}}
class FixtureClueTable {
 public:
  FixtureClueTable() = default;

  static std::shared_ptr<const FixtureClueTable> load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fixture table " + path.string());
    return std::make_shared<const FixtureClueTable>(from_json(nlohmann::json::parse(in)));
  }

  static FixtureClueTable from_json(const nlohmann::json& j) {
    FixtureClueTable t;
    for (const auto& [hash, rec] : j.at("images").items()) {
      FixtureImageRecord r;
      for (const auto& e : rec.value("visual_entities", nlohmann::json::array()))
        r.visual_entities.push_back({e.at("name").get<std::string>(),
                                     parse_visual_category(e.value("category", std::string("other")))});
      r.event = rec.value("event", std::string());
      if (auto rs = rec.find("reverse_search"); rs != rec.end() && rs->is_object()) {
        if (auto tm = rs->find("time"); tm != rs->end() && !tm->is_null())
          r.reverse.earliest_time = Date::require_iso(tm->get<std::string>());
        if (auto ti = rs->find("title"); ti != rs->end() && !ti->is_null()) r.reverse.title = ti->get<std::string>();
      }
      r.manipulation = rec.value("manipulation", std::string("pristine"));
      t.records_.emplace(hash, std::move(r));
    }
    return t;
  }

  nlohmann::json to_json() const {
    static constexpr const char* kCategory[] = {"person", "landmark", "organization", "other"};
    nlohmann::json images = nlohmann::json::object();
    for (const auto& [hash, r] : records_) {
      nlohmann::json ents = nlohmann::json::array();
      for (const auto& e : r.visual_entities)
        ents.push_back({{"name", e.name}, {"category", kCategory[static_cast<int>(e.category)]}});
      nlohmann::json rs{{"time", r.reverse.earliest_time ? nlohmann::json(r.reverse.earliest_time->iso()) : nullptr},
                        {"title", r.reverse.title ? nlohmann::json(*r.reverse.title) : nullptr}};
      images[hash] = {{"visual_entities", ents}, {"event", r.event}, {"reverse_search", rs},
                      {"manipulation", r.manipulation}};
    }
    return {{"images", images}};
  }

  void put(const std::string& hash_hex, FixtureImageRecord r) { records_[hash_hex] = std::move(r); }

  const FixtureImageRecord* find(const std::string& hash_hex) const {
    auto it = records_.find(hash_hex);
    return it == records_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::string, FixtureImageRecord> records_;
};

class FixtureVisualEntityProvider final : public VisualEntityProvider {
 public:
  explicit FixtureVisualEntityProvider(std::shared_ptr<const FixtureClueTable> table) : table_(std::move(table)) {}
  std::string name() const override { return "fixture-visual-entity"; }
  bool deterministic() const override { return true; }
  std::vector<VisualEntity> entities(const Image& image) const override {
    const auto* r = table_->find(image.hash_hex());
    return r ? r->visual_entities : std::vector<VisualEntity>{};
  }

 private:
  std::shared_ptr<const FixtureClueTable> table_;
};

class FixtureImageEventProvider final : public ImageEventProvider {
 public:
  explicit FixtureImageEventProvider(std::shared_ptr<const FixtureClueTable> table) : table_(std::move(table)) {}
  std::string name() const override { return "fixture-image-event"; }
  bool deterministic() const override { return true; }
  std::string describe(const Image& image) const override {
    const auto* r = table_->find(image.hash_hex());
    return r ? r->event : std::string();
  }

 private:
  std::shared_ptr<const FixtureClueTable> table_;
};

class FixtureReverseSearchProvider final : public ReverseSearchProvider {
 public:
  explicit FixtureReverseSearchProvider(std::shared_ptr<const FixtureClueTable> table) : table_(std::move(table)) {}
  std::string name() const override { return "fixture-reverse-search"; }
  bool deterministic() const override { return true; }
  ReverseSearchHit search(const Image& image) const override {
    const auto* r = table_->find(image.hash_hex());
    return r ? r->reverse : ReverseSearchHit{};
  }

 private:
  std::shared_ptr<const FixtureClueTable> table_;
};

inline ProviderRegistry make_fixture_providers(std::shared_ptr<const FixtureClueTable> table) {
  ProviderRegistry r;
  r.textual_entity = std::make_shared<FixtureTextualEntityProvider>();
  r.visual_entity = std::make_shared<FixtureVisualEntityProvider>(table);
  r.image_event = std::make_shared<FixtureImageEventProvider>(table);
  r.reverse_search = std::make_shared<FixtureReverseSearchProvider>(table);
  return r;
}

}  // namespace mgca
