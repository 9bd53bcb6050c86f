#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/common/date.hpp"

namespace mgca {

/// Per-clue validity. A flag is false exactly when the clue is absent or empty.
struct ClueValidity {
  bool textual_entities = false;
  bool visual_entities = false;
  bool image_event = false;
  bool retrieved_title = false;
  bool visual_time = false;
  bool temporal_gap = false;

  bool all() const {
    return textual_entities && visual_entities && image_event && retrieved_title && visual_time && temporal_gap;
  }
  bool operator==(const ClueValidity&) const = default;
};

/// Evidence extracted for one post.
struct ClueSet {
  std::string id;
  std::vector<std::string> textual_entities;  // E_p
  std::vector<std::string> visual_entities;   // E_v
  std::string image_event;                    // S
  std::optional<std::string> retrieved_title; // R
  std::optional<Date> visual_time;            // T_v
  Date textual_time;                          // T_p
  std::optional<long> temporal_gap_days;      // T_g
  ClueValidity validity;

  bool operator==(const ClueSet&) const = default;

  /// Recomputes validity from the clue values.
  void refresh_validity() {
    validity.textual_entities = !textual_entities.empty();
    validity.visual_entities = !visual_entities.empty();
    validity.image_event = !image_event.empty();
    validity.retrieved_title = retrieved_title.has_value() && !retrieved_title->empty();
    validity.visual_time = visual_time.has_value();
    validity.temporal_gap = temporal_gap_days.has_value();
  }
};

inline nlohmann::json to_json(const ClueSet& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["E_p"] = c.textual_entities;
  j["E_v"] = c.visual_entities;
  j["S"] = c.image_event;
  j["R"] = c.retrieved_title ? nlohmann::json(*c.retrieved_title) : nlohmann::json(nullptr);
  j["T_v"] = c.visual_time ? nlohmann::json(c.visual_time->iso()) : nlohmann::json(nullptr);
  j["T_p"] = c.textual_time.iso();
  j["T_g_days"] = c.temporal_gap_days ? nlohmann::json(*c.temporal_gap_days) : nlohmann::json(nullptr);
  j["validity"] = {{"E_p", c.validity.textual_entities}, {"E_v", c.validity.visual_entities},
                   {"S", c.validity.image_event},        {"R", c.validity.retrieved_title},
                   {"T_v", c.validity.visual_time},      {"T_g", c.validity.temporal_gap}};
  return j;
}

inline ClueSet clue_set_from_json(const nlohmann::json& j) {
  ClueSet c;
  c.id = j.at("id").get<std::string>();
  c.textual_entities = j.at("E_p").get<std::vector<std::string>>();
  c.visual_entities = j.at("E_v").get<std::vector<std::string>>();
  c.image_event = j.at("S").get<std::string>();
  if (!j.at("R").is_null()) c.retrieved_title = j["R"].get<std::string>();
  if (!j.at("T_v").is_null()) c.visual_time = Date::require_iso(j["T_v"].get<std::string>());
  c.textual_time = Date::require_iso(j.at("T_p").get<std::string>());
  if (!j.at("T_g_days").is_null()) c.temporal_gap_days = j["T_g_days"].get<long>();
  const auto& v = j.at("validity");
  c.validity.textual_entities = v.at("E_p").get<bool>();
  c.validity.visual_entities = v.at("E_v").get<bool>();
  c.validity.image_event = v.at("S").get<bool>();
  c.validity.retrieved_title = v.at("R").get<bool>();
  c.validity.visual_time = v.at("T_v").get<bool>();
  c.validity.temporal_gap = v.at("T_g").get<bool>();
  return c;
}

}  // namespace mgca
