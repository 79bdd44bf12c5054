#pragma once

#include <chrono>
#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace oracleloom {

/// UTC calendar date. All windows and record keys use whole days.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses `YYYY-MM-DD`; nullopt when malformed or not a real calendar day.
  static std::optional<Date> parse(std::string_view text);
  std::string to_string() const;

  std::chrono::sys_days sys_days() const { return days_; }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }

  Date operator+(int n) const { return Date{days_ + std::chrono::days{n}}; }
  Date operator-(int n) const { return Date{days_ - std::chrono::days{n}}; }
  int operator-(Date other) const { return static_cast<int>((days_ - other.days_).count()); }
  Date& operator++() {
    days_ += std::chrono::days{1};
    return *this;
  }

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

/// Inclusive range of days.
struct DateRange {
  Date start;
  Date end;

  bool contains(Date d) const { return start <= d && d <= end; }
  int days() const { return end - start + 1; }
  bool operator==(const DateRange&) const = default;
};

using Timestamp = std::chrono::sys_seconds;

/// RFC 3339 (`2024-05-01T08:30:00Z`, offsets and fractional seconds accepted).
std::optional<Timestamp> parse_rfc3339(std::string_view text);
/// Always renders UTC with a `Z` suffix and whole seconds.
std::string format_rfc3339(Timestamp ts);

Date day_of(Timestamp ts);
Timestamp start_of(Date d);

/// Injected wall clock so runs can be pinned (golden reports, replay corpora).
using Clock = std::function<Timestamp()>;
Clock system_clock();
Clock fixed_clock(Timestamp at);

/// Injected sleep so politeness intervals and retry backoff are testable.
using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

}  // namespace oracleloom

template <>
struct std::hash<oracleloom::Date> {
  size_t operator()(const oracleloom::Date& d) const noexcept {
    return std::hash<long long>{}(d.sys_days().time_since_epoch().count());
  }
};
