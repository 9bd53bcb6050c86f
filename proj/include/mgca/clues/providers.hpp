#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mgca/common/date.hpp"
#include "mgca/data/visual.hpp"

namespace mgca {

enum class ProviderKind { textual_entity, visual_entity, image_event, reverse_search };

inline std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::textual_entity: return "textual_entity";
    case ProviderKind::visual_entity: return "visual_entity";
    case ProviderKind::image_event: return "image_event";
    default: return "reverse_search";
  }
}

/// Common surface of every clue source. Implementations report failure by
/// throwing; the extraction functions below turn that into an invalid clue.
class ClueProvider {
 public:
  virtual ~ClueProvider() = default;
  virtual std::string name() const = 0;
  virtual ProviderKind kind() const = 0;
  virtual bool deterministic() const = 0;
};

class TextualEntityProvider : public ClueProvider {
 public:
  ProviderKind kind() const final { return ProviderKind::textual_entity; }
  virtual std::vector<std::string> entities(std::string_view text) const = 0;
};

enum class VisualEntityCategory { person, landmark, organization, other };

inline VisualEntityCategory parse_visual_category(std::string_view s) {
  if (s == "person" || s == "individual") return VisualEntityCategory::person;
  if (s == "landmark") return VisualEntityCategory::landmark;
  if (s == "organization") return VisualEntityCategory::organization;
  return VisualEntityCategory::other;
}

struct VisualEntity {
  std::string name;
  VisualEntityCategory category = VisualEntityCategory::other;
};

class VisualEntityProvider : public ClueProvider {
 public:
  ProviderKind kind() const final { return ProviderKind::visual_entity; }
  virtual std::vector<VisualEntity> entities(const Image& image) const = 0;
};

class ImageEventProvider : public ClueProvider {
 public:
  ProviderKind kind() const final { return ProviderKind::image_event; }
  virtual std::string describe(const Image& image) const = 0;
};

struct ReverseSearchHit {
  std::optional<Date> earliest_time;
  std::optional<std::string> title;
};

class ReverseSearchProvider : public ClueProvider {
 public:
  ProviderKind kind() const final { return ProviderKind::reverse_search; }
  virtual ReverseSearchHit search(const Image& image) const = 0;
};

/// A clue value plus whether it is usable downstream.
template <typename T>
struct Clue {
  T value{};
  bool valid = false;
};

namespace detail {

inline std::vector<std::string> dedup_ordered(std::vector<std::string> items) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (auto& s : items) {
    if (s.empty()) continue;
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

inline Clue<std::vector<std::string>> extract_textual_entities(std::string_view text,
                                                               const TextualEntityProvider& provider) {
  try {
    auto list = detail::dedup_ordered(provider.entities(text));
    bool valid = !list.empty();
    return {std::move(list), valid};
  } catch (const std::exception&) {
    return {};
  }
}

/// Visual entities restricted to people, landmarks and organizations.
inline Clue<std::vector<std::string>> extract_visual_entities(const Image& image,
                                                              const VisualEntityProvider& provider) {
  try {
    std::vector<std::string> names;
    for (auto& e : provider.entities(image))
      if (e.category != VisualEntityCategory::other) names.push_back(std::move(e.name));
    auto list = detail::dedup_ordered(std::move(names));
    bool valid = !list.empty();
    return {std::move(list), valid};
  } catch (const std::exception&) {
    return {};
  }
}

inline Clue<std::string> describe_image_event(const Image& image, const ImageEventProvider& provider) {
  try {
    std::string s = provider.describe(image);
    bool valid = !s.empty();
    return {std::move(s), valid};
  } catch (const std::exception&) {
    return {};
  }
}

inline Clue<ReverseSearchHit> reverse_search(const Image& image, const ReverseSearchProvider& provider) {
  try {
    ReverseSearchHit hit = provider.search(image);
    if (hit.title && hit.title->empty()) hit.title.reset();
    bool valid = hit.earliest_time.has_value() || hit.title.has_value();
    return {std::move(hit), valid};
  } catch (const std::exception&) {
    return {};
  }
}

/// One provider per clue kind.
struct ProviderRegistry {
  std::shared_ptr<const TextualEntityProvider> textual_entity;
  std::shared_ptr<const VisualEntityProvider> visual_entity;
  std::shared_ptr<const ImageEventProvider> image_event;
  std::shared_ptr<const ReverseSearchProvider> reverse_search;

  void require_complete() const {
    if (!textual_entity || !visual_entity || !image_event || !reverse_search)
      throw Error("provider registry must hold one provider per clue kind");
  }

  /// Cache key component naming the providers in kind order.
  std::string key() const {
    require_complete();
    return textual_entity->name() + "," + visual_entity->name() + "," + image_event->name() + "," +
           reverse_search->name();
  }
};

}  // namespace mgca
