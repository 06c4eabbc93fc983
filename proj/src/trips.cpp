#include "h2sched/trips.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "h2sched/errors.hpp"
#include "h2sched/text_io.hpp"

namespace h2sched {

namespace {

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const char* role) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw ConfigError(std::string("required ") + role + " column '" + name +
                      "' not found in header");
  return std::size_t(it - header.begin());
}

}  // namespace

ParseResult parse_trips(std::istream& in, const TripSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trip input is empty, no header row");
  auto header = split_line(line, schema.delimiter);
  std::size_t pick_col = find_column(header, schema.pickup_column, "pickup timestamp");
  std::size_t drop_col = find_column(header, schema.dropoff_column, "dropoff timestamp");
  std::size_t dist_col = find_column(header, schema.distance_column, "trip distance");
  std::size_t min_cols = std::max({pick_col, drop_col, dist_col}) + 1;

  ParseResult result;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++result.rows_read;
    auto fields = split_line(line, schema.delimiter);
    if (fields.size() < min_cols) {
      ++result.failures;
      continue;
    }
    auto pickup = parse_timestamp(fields[pick_col]);
    auto dropoff = parse_timestamp(fields[drop_col]);
    auto distance = parse_double(fields[dist_col]);
    if (!pickup || !dropoff || !distance || *distance < 0.0 || *dropoff < *pickup) {
      ++result.failures;
      continue;
    }
    result.records.push_back(TripRecord{*pickup, *dropoff, *distance});
  }
  return result;
}

int first_violated_rule(const TripRecord& r) {
  if (!(r.trip_distance > 0.0)) return 1;
  double t = r.ride_time_hours();
  if (!(t > 1.0 / 60.0 && t < 3.0)) return 2;
  double v = r.trip_distance / t;
  if (!(v > 0.0 && v <= 80.0)) return 3;
  return 0;
}

CleanResult clean(const std::vector<TripRecord>& records) {
  CleanResult result;
  result.report.total_read = records.size();
  for (const TripRecord& r : records) {
    int rule = first_violated_rule(r);
    if (rule == 0) {
      result.retained.push_back(r);
    } else {
      ++result.report.rejected_by_rule[std::size_t(rule - 1)];
    }
  }
  result.report.retained = result.retained.size();
  return result;
}

GroupResult group_quarters(const std::vector<TripRecord>& records,
                           CivilDate first, CivilDate last) {
  if (!valid_date(first) || !valid_date(last) || last < first)
    throw ConfigError("invalid grouping date range " + format_date(first) + " .. " +
                      format_date(last));

  std::int64_t first_day = day_number(first);
  std::int64_t last_day = day_number(last);
  std::size_t num_days = std::size_t(last_day - first_day + 1);
  std::size_t num_quarters = num_days * 96;

  GroupResult result;
  result.quarters.resize(num_quarters);
  for (std::size_t i = 0; i < num_quarters; ++i) {
    QuarterRecord& q = result.quarters[i];
    q.key.date = date_from_day_number(first_day + std::int64_t(i / 96));
    q.key.hour = int((i % 96) / 4);
    q.key.quarter = int(i % 4) + 1;
  }

  for (const TripRecord& r : records) {
    std::int64_t day = r.pickup_time / 86400;
    if (r.pickup_time < 0 && r.pickup_time % 86400 != 0) --day;
    if (day < first_day || day > last_day) {
      ++result.out_of_range;
      continue;
    }
    int sec_of_day = int(r.pickup_time - day * 86400);
    std::size_t idx = std::size_t(day - first_day) * 96 + std::size_t(sec_of_day / 900);
    QuarterRecord& q = result.quarters[idx];
    q.total_distance += r.trip_distance;
    q.total_ride_time += r.ride_time_hours();
    ++q.trip_count;
  }
  return result;
}

void write_quarters(std::ostream& out, const std::vector<QuarterRecord>& quarters) {
  out << "date,hour,quarter,total_distance_mi,total_ride_time_h,trip_count\n";
  for (const QuarterRecord& q : quarters) {
    out << format_date(q.key.date) << ',' << q.key.hour << ',' << q.key.quarter << ','
        << format_double(q.total_distance) << ',' << format_double(q.total_ride_time)
        << ',' << q.trip_count << '\n';
  }
}

std::vector<QuarterRecord> read_quarters(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("quarter table is empty");
  if (trim(line) != "date,hour,quarter,total_distance_mi,total_ride_time_h,trip_count")
    throw DataError("unexpected quarter table header: " + line);
  std::vector<QuarterRecord> quarters;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != 6)
      throw DataError("quarter table row " + std::to_string(row) + ": expected 6 fields");
    auto date = parse_date(fields[0]);
    auto hour = parse_int(fields[1]);
    auto quarter = parse_int(fields[2]);
    auto dist = parse_double(fields[3]);
    auto time = parse_double(fields[4]);
    auto count = parse_int(fields[5]);
    if (!date || !hour || !quarter || !dist || !time || !count || *hour < 0 ||
        *hour > 23 || *quarter < 1 || *quarter > 4 || *count < 0)
      throw DataError("quarter table row " + std::to_string(row) + ": malformed values");
    QuarterRecord q;
    q.key = QuarterKey{*date, int(*hour), int(*quarter)};
    q.total_distance = *dist;
    q.total_ride_time = *time;
    q.trip_count = std::uint64_t(*count);
    quarters.push_back(q);
  }
  return quarters;
}

KeyValueList cleaning_report_kv(const CleaningReport& report, std::uint64_t out_of_range) {
  return KeyValueList{
      {"total_read", std::to_string(report.total_read)},
      {"parse_failures", std::to_string(report.parse_failures)},
      {"rejected_rule1_distance", std::to_string(report.rejected_by_rule[0])},
      {"rejected_rule2_ride_time", std::to_string(report.rejected_by_rule[1])},
      {"rejected_rule3_speed", std::to_string(report.rejected_by_rule[2])},
      {"retained", std::to_string(report.retained)},
      {"out_of_range", std::to_string(out_of_range)},
  };
}

}  // namespace h2sched
