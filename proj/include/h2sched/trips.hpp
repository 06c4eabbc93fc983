#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "h2sched/text_io.hpp"
#include "h2sched/time_util.hpp"

namespace h2sched {

// One taxi trip after parsing. Parsing guarantees dropoff >= pickup and
// a non-negative distance; everything else is the cleaner's business.
struct TripRecord {
  std::int64_t pickup_time = 0;   // civil seconds
  std::int64_t dropoff_time = 0;  // civil seconds
  double trip_distance = 0.0;     // miles

  double ride_time_hours() const {
    return double(dropoff_time - pickup_time) / 3600.0;
  }
};

struct TripSchema {
  std::string pickup_column;
  std::string dropoff_column;
  std::string distance_column;
  char delimiter = ',';
};

struct ParseResult {
  std::vector<TripRecord> records;
  std::uint64_t rows_read = 0;  // data rows seen, header excluded
  std::uint64_t failures = 0;   // malformed rows skipped
};

// Reads delimiter-separated text with a header row. Rows with missing or
// unparseable fields (including dropoff < pickup) are counted and skipped.
// Throws ConfigError when a required column is absent from the header.
ParseResult parse_trips(std::istream& in, const TripSchema& schema);

inline constexpr int kCleaningRules = 3;

struct CleaningReport {
  std::uint64_t total_read = 0;
  std::uint64_t parse_failures = 0;
  std::array<std::uint64_t, kCleaningRules> rejected_by_rule{};
  std::uint64_t retained = 0;

  std::uint64_t rejected_total() const {
    return rejected_by_rule[0] + rejected_by_rule[1] + rejected_by_rule[2];
  }
  bool reconciles() const {
    return retained + rejected_total() + parse_failures == total_read;
  }
};

struct CleanResult {
  std::vector<TripRecord> retained;
  CleaningReport report;  // total_read = input size, parse_failures = 0
};

// 0 if the record passes, else the 1-based index of the first violated rule:
//   1: trip distance > 0 miles
//   2: 1/60 < ride time < 3 hours (strict)
//   3: 0 < distance / ride time <= 80 mph
int first_violated_rule(const TripRecord& r);

CleanResult clean(const std::vector<TripRecord>& records);

struct QuarterRecord {
  QuarterKey key;
  double total_distance = 0.0;   // miles
  double total_ride_time = 0.0;  // hours
  std::uint64_t trip_count = 0;
};

struct GroupResult {
  std::vector<QuarterRecord> quarters;  // chronological, gap-free over the range
  std::uint64_t out_of_range = 0;       // trips whose pickup date fell outside
};

// Buckets each trip into the quarter containing its pickup time and emits one
// record per (date, hour, quarter) in [first, last], zero-trip quarters included.
GroupResult group_quarters(const std::vector<TripRecord>& records,
                           CivilDate first, CivilDate last);

// Table I/O, header: date,hour,quarter,total_distance_mi,total_ride_time_h,trip_count
void write_quarters(std::ostream& out, const std::vector<QuarterRecord>& quarters);
std::vector<QuarterRecord> read_quarters(std::istream& in);

KeyValueList cleaning_report_kv(const CleaningReport& report, std::uint64_t out_of_range);

}  // namespace h2sched
