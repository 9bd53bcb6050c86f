#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "mgca/common/date.hpp"

namespace mgca {

namespace detail {

inline constexpr const char* kMonthPattern =
    "(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|"
    "oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";

inline unsigned month_number(std::string m) {
  for (auto& c : m) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static constexpr const char* kPrefixes[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                              "jul", "aug", "sep", "oct", "nov", "dec"};
  for (unsigned i = 0; i < 12; ++i)
    if (m.rfind(kPrefixes[i], 0) == 0) return i + 1;
  return 0;
}

}  // namespace detail

/// Every date mention found in `text`, in match order.
///
/// Recognized forms: ISO "2023-02-06"; "Feb 6, 2023" and "6 February 2023";
/// "February 2023" (anchored to day 1); bare years 1900-2099 (anchored to
/// January 1). Matched spans are blanked before weaker forms run, so "Feb 2023"
/// does not also yield the bare year. Impossible dates are dropped.
inline std::vector<Date> find_date_mentions(std::string_view text) {
  using std::regex;
  using std::regex_constants::icase;
  static const regex iso(R"(\b(\d{4})-(\d{2})-(\d{2})\b)");
  static const regex month_day_year(std::string(R"(\b)") + detail::kMonthPattern +
                                        R"(\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})\b)",
                                    icase);
  static const regex day_month_year(std::string(R"(\b(\d{1,2})(?:st|nd|rd|th)?\s+)") + detail::kMonthPattern +
                                        R"(\.?,?\s+(\d{4})\b)",
                                    icase);
  static const regex month_year(std::string(R"(\b)") + detail::kMonthPattern + R"(\.?,?\s+(\d{4})\b)", icase);
  static const regex bare_year(R"(\b(19\d{2}|20\d{2})\b)");

  std::string buf(text);
  std::vector<Date> found;
  auto scan = [&](const regex& re, auto make) {
    std::string next = buf;
    for (auto it = std::sregex_iterator(buf.begin(), buf.end(), re); it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      if (auto d = make(m)) found.push_back(*d);
      next.replace(static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0)),
                   static_cast<std::size_t>(m.length(0)), ' ');
    }
    buf = std::move(next);
  };
  auto num = [](const std::ssub_match& s) { return std::stoi(s.str()); };

  scan(iso, [&](const std::smatch& m) {
    return Date::from_ymd(num(m[1]), static_cast<unsigned>(num(m[2])), static_cast<unsigned>(num(m[3])));
  });
  scan(month_day_year, [&](const std::smatch& m) {
    return Date::from_ymd(num(m[3]), detail::month_number(m[1].str()), static_cast<unsigned>(num(m[2])));
  });
  scan(day_month_year, [&](const std::smatch& m) {
    return Date::from_ymd(num(m[3]), detail::month_number(m[2].str()), static_cast<unsigned>(num(m[1])));
  });
  scan(month_year, [&](const std::smatch& m) { return Date::from_ymd(num(m[2]), detail::month_number(m[1].str()), 1); });
  scan(bare_year, [&](const std::smatch& m) { return Date::from_ymd(num(m[1]), 1, 1); });
  return found;
}

/// Textual reference time: the earlier of the publication date and the
/// earliest date mentioned in the text.
inline Date extract_textual_time(std::string_view text, Date published_at) {
  Date best = published_at;
  for (const Date& d : find_date_mentions(text)) best = std::min(best, d);
  return best;
}

/// Temporal gap in days, `textual_time - visual_time`; absent without a visual time.
inline std::optional<long> compute_temporal_gap(Date textual_time, std::optional<Date> visual_time) {
  if (!visual_time) return std::nullopt;
  return textual_time.days_since(*visual_time);
}

}  // namespace mgca
