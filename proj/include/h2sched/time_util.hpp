#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace h2sched {

// Calendar date, no time zone. All timestamps in this project are naive
// civil times as they appear in the source data.
struct CivilDate {
  int year = 1970;
  int month = 1;  // 1-12
  int day = 1;    // 1-31
  auto operator<=>(const CivilDate&) const = default;
};

struct MonthKey {
  int year = 1970;
  int month = 1;
  auto operator<=>(const MonthKey&) const = default;
};

// One 15-minute bucket: hour 0-23, quarter 1-4 within the hour.
struct QuarterKey {
  CivilDate date;
  int hour = 0;
  int quarter = 1;
  auto operator<=>(const QuarterKey&) const = default;
};

bool valid_date(CivilDate d);
int days_in_month(int year, int month);

// Days since 1970-01-01.
std::int64_t day_number(CivilDate d);
CivilDate date_from_day_number(std::int64_t days);

// Civil seconds since 1970-01-01 00:00:00.
std::int64_t civil_seconds(CivilDate d, int hour, int minute, int second);
CivilDate date_of(std::int64_t civil_sec);
QuarterKey quarter_of(std::int64_t civil_sec);

// Period start of a quarter bucket, as civil seconds.
std::int64_t quarter_start_seconds(const QuarterKey& q);
QuarterKey next_quarter(const QuarterKey& q);

// Strict "YYYY-MM-DD HH:MM:SS" (seconds may be omitted).
std::optional<std::int64_t> parse_timestamp(std::string_view s);
std::optional<CivilDate> parse_date(std::string_view s);   // "YYYY-MM-DD"
std::optional<MonthKey> parse_month(std::string_view s);   // "YYYY-MM"

std::string format_date(CivilDate d);
std::string format_timestamp(std::int64_t civil_sec);
std::string format_month(MonthKey m);

inline MonthKey month_of(CivilDate d) { return MonthKey{d.year, d.month}; }

}  // namespace h2sched
