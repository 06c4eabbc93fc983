#include "h2sched/time_util.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace h2sched {

namespace {

namespace chr = std::chrono;

chr::year_month_day to_ymd(CivilDate d) {
  return chr::year_month_day{chr::year{d.year}, chr::month{unsigned(d.month)},
                             chr::day{unsigned(d.day)}};
}

bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

}  // namespace

bool valid_date(CivilDate d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= days_in_month(d.year, d.month);
}

int days_in_month(int year, int month) {
  auto last = chr::year_month_day_last{chr::year{year},
                                       chr::month_day_last{chr::month{unsigned(month)}}};
  return int(unsigned(last.day()));
}

std::int64_t day_number(CivilDate d) {
  return chr::sys_days{to_ymd(d)}.time_since_epoch().count();
}

CivilDate date_from_day_number(std::int64_t days) {
  auto ymd = chr::year_month_day{chr::sys_days{chr::days{days}}};
  return CivilDate{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

std::int64_t civil_seconds(CivilDate d, int hour, int minute, int second) {
  return day_number(d) * 86400 + hour * 3600 + minute * 60 + second;
}

CivilDate date_of(std::int64_t civil_sec) {
  std::int64_t days = civil_sec / 86400;
  if (civil_sec < 0 && civil_sec % 86400 != 0) --days;
  return date_from_day_number(days);
}

QuarterKey quarter_of(std::int64_t civil_sec) {
  std::int64_t days = civil_sec / 86400;
  if (civil_sec < 0 && civil_sec % 86400 != 0) --days;
  int sec_of_day = int(civil_sec - days * 86400);
  QuarterKey q;
  q.date = date_from_day_number(days);
  q.hour = sec_of_day / 3600;
  q.quarter = (sec_of_day % 3600) / 900 + 1;
  return q;
}

std::int64_t quarter_start_seconds(const QuarterKey& q) {
  return civil_seconds(q.date, q.hour, (q.quarter - 1) * 15, 0);
}

QuarterKey next_quarter(const QuarterKey& q) {
  return quarter_of(quarter_start_seconds(q) + 900);
}

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  // "YYYY-MM-DD HH:MM" or "YYYY-MM-DD HH:MM:SS"
  if (s.size() != 16 && s.size() != 19) return std::nullopt;
  int y, mo, d, h, mi, sec = 0;
  if (!parse_fixed_int(s, 0, 4, y) || s[4] != '-' || !parse_fixed_int(s, 5, 2, mo) ||
      s[7] != '-' || !parse_fixed_int(s, 8, 2, d) || s[10] != ' ' ||
      !parse_fixed_int(s, 11, 2, h) || s[13] != ':' || !parse_fixed_int(s, 14, 2, mi))
    return std::nullopt;
  if (s.size() == 19) {
    if (s[16] != ':' || !parse_fixed_int(s, 17, 2, sec)) return std::nullopt;
  }
  CivilDate date{y, mo, d};
  if (!valid_date(date) || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59)
    return std::nullopt;
  return civil_seconds(date, h, mi, sec);
}

std::optional<CivilDate> parse_date(std::string_view s) {
  if (s.size() != 10) return std::nullopt;
  int y, mo, d;
  if (!parse_fixed_int(s, 0, 4, y) || s[4] != '-' || !parse_fixed_int(s, 5, 2, mo) ||
      s[7] != '-' || !parse_fixed_int(s, 8, 2, d))
    return std::nullopt;
  CivilDate date{y, mo, d};
  if (!valid_date(date)) return std::nullopt;
  return date;
}

std::optional<MonthKey> parse_month(std::string_view s) {
  if (s.size() != 7) return std::nullopt;
  int y, mo;
  if (!parse_fixed_int(s, 0, 4, y) || s[4] != '-' || !parse_fixed_int(s, 5, 2, mo))
    return std::nullopt;
  if (mo < 1 || mo > 12) return std::nullopt;
  return MonthKey{y, mo};
}

std::string format_date(CivilDate d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string format_timestamp(std::int64_t civil_sec) {
  std::int64_t days = civil_sec / 86400;
  if (civil_sec < 0 && civil_sec % 86400 != 0) --days;
  int sec_of_day = int(civil_sec - days * 86400);
  CivilDate d = date_from_day_number(days);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", d.year, d.month, d.day,
                sec_of_day / 3600, (sec_of_day % 3600) / 60, sec_of_day % 60);
  return buf;
}

std::string format_month(MonthKey m) {
  char buf[12];
  std::snprintf(buf, sizeof buf, "%04d-%02d", m.year, m.month);
  return buf;
}

}  // namespace h2sched
