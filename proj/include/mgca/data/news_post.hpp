#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mgca/common/date.hpp"
#include "mgca/common/error.hpp"

namespace mgca {

enum class Platform { instagram, twitter, facebook, other };

inline constexpr std::array<std::string_view, 4> kPlatformNames{"instagram", "twitter", "facebook", "other"};

inline std::string_view to_string(Platform p) { return kPlatformNames[static_cast<std::size_t>(p)]; }

inline std::optional<Platform> parse_platform(std::string_view s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (std::size_t i = 0; i < kPlatformNames.size(); ++i)
    if (lower == kPlatformNames[i]) return static_cast<Platform>(i);
  return std::nullopt;
}

/// Attribution classes; 0 is real news, 1..5 are the reasons a post is fake.
enum class Attribution : int { real = 0, image_fab = 1, image_noe = 2, entity_inc = 3, event_inc = 4, time_inc = 5 };

inline constexpr int kNumAttributionClasses = 6;

inline constexpr std::array<std::string_view, kNumAttributionClasses> kAttributionNames{
    "real", "ImageFab", "ImageNoE", "EntityInc", "EventInc", "TimeInc"};

/// Collapses whitespace runs to a single space and trims both ends.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

struct NewsPost {
  std::string id;
  std::string text;
  std::string visual_ref;
  Date published_at;
  Platform platform = Platform::other;
  std::optional<int> label_binary;
  std::optional<int> label_attribution;

  bool operator==(const NewsPost&) const = default;
};

/// Checks the label pairing rule: binary 0 <=> attribution 0.
inline bool labels_consistent(const NewsPost& p) {
  if (!p.label_binary || !p.label_attribution) return true;
  return (*p.label_binary == 0) == (*p.label_attribution == 0);
}

inline nlohmann::json to_json(const NewsPost& p) {
  nlohmann::json j{{"id", p.id},
                   {"text", p.text},
                   {"visual_ref", p.visual_ref},
                   {"published_at", p.published_at.iso()},
                   {"platform", std::string(to_string(p.platform))}};
  if (p.label_binary) j["label_binary"] = *p.label_binary;
  if (p.label_attribution) j["label_attribution"] = *p.label_attribution;
  return j;
}

/// Parses one post record. Throws mgca::Error with a short reason on any
/// schema violation; does not touch the filesystem.
inline NewsPost post_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("record is not a JSON object");
  auto str_field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw Error(std::string("missing or non-string field \"") + key + "\"");
    return it->get<std::string>();
  };
  auto label_field = [&](const char* key) -> std::optional<int> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw Error(std::string("non-integer field \"") + key + "\"");
    return it->get<int>();
  };

  NewsPost p;
  p.id = str_field("id");
  if (p.id.empty()) throw Error("empty id");
  p.text = normalize_whitespace(str_field("text"));
  if (p.text.empty()) throw Error("empty text");
  p.visual_ref = str_field("visual_ref");
  if (p.visual_ref.empty()) throw Error("empty visual_ref");
  auto date = Date::parse_iso(str_field("published_at"));
  if (!date) throw Error("invalid published_at");
  p.published_at = *date;
  auto platform = parse_platform(str_field("platform"));
  if (!platform) throw Error("unknown platform");
  p.platform = *platform;
  p.label_binary = label_field("label_binary");
  p.label_attribution = label_field("label_attribution");
  if (p.label_binary && *p.label_binary != 0 && *p.label_binary != 1) throw Error("label_binary out of range");
  if (p.label_attribution && (*p.label_attribution < 0 || *p.label_attribution >= kNumAttributionClasses))
    throw Error("label_attribution out of range");
  if (!labels_consistent(p)) throw Error("label inconsistency");
  return p;
}

}  // namespace mgca
