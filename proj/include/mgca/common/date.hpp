#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "mgca/common/error.hpp"

namespace mgca {

/// Calendar date at day precision.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}

  static std::optional<Date> from_ymd(int y, unsigned m, unsigned d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{std::chrono::sys_days{ymd}};
  }

  /// Strict "YYYY-MM-DD".
  static std::optional<Date> parse_iso(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t from, std::size_t n) -> int {
      int v = 0;
      for (std::size_t i = from; i < from + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return -1;
        v = v * 10 + (s[i] - '0');
      }
      return v;
    };
    int y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (y < 0 || m < 0 || d < 0) return std::nullopt;
    return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
  }

  static Date require_iso(std::string_view s) {
    auto d = parse_iso(s);
    if (!d) throw Error("invalid date \"" + std::string(s) + "\" (expected YYYY-MM-DD)");
    return *d;
  }

  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }

  std::string iso() const {
    auto v = ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()), static_cast<unsigned>(v.month()),
                  static_cast<unsigned>(v.day()));
    return buf;
  }

  std::chrono::sys_days days() const { return days_; }

  /// Signed day count `*this - other`.
  long days_since(const Date& other) const { return static_cast<long>((days_ - other.days_).count()); }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace mgca
