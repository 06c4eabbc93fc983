#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "h2sched/errors.hpp"
#include "h2sched/time_util.hpp"
#include "h2sched/trips.hpp"

using namespace h2sched;

namespace {

std::int64_t ts(const char* s) {
  auto v = parse_timestamp(s);
  REQUIRE(v.has_value());
  return *v;
}

TripRecord trip(const char* pickup, const char* dropoff, double dist) {
  return TripRecord{ts(pickup), ts(dropoff), dist};
}

// pickup at an offset from a fixed day, ride time given in seconds
TripRecord trip_s(std::int64_t pickup_sec, std::int64_t ride_sec, double dist) {
  return TripRecord{pickup_sec, pickup_sec + ride_sec, dist};
}

const std::int64_t kDay = parse_timestamp("2016-01-05 00:00:00").value();

}  // namespace

TEST_CASE("timestamp parsing is strict") {
  CHECK(parse_timestamp("2016-01-05 08:00:00").has_value());
  CHECK(parse_timestamp("2016-01-05 08:00").has_value());  // seconds optional
  CHECK(ts("2016-01-05 08:00") == ts("2016-01-05 08:00:00"));
  CHECK_FALSE(parse_timestamp("2016-13-01 00:00:00").has_value());
  CHECK_FALSE(parse_timestamp("2016-02-30 00:00:00").has_value());
  CHECK_FALSE(parse_timestamp("2016-01-05T08:00:00").has_value());
  CHECK_FALSE(parse_timestamp("2016-01-05 24:00:00").has_value());
  CHECK_FALSE(parse_timestamp("2016-01-05 08:61:00").has_value());
  CHECK_FALSE(parse_timestamp("garbage").has_value());
  CHECK_FALSE(parse_timestamp("").has_value());
  CHECK(parse_timestamp("2016-02-29 12:00:00").has_value());   // leap year
  CHECK_FALSE(parse_timestamp("2015-02-29 12:00:00").has_value());
}

TEST_CASE("timestamp formatting round-trips") {
  for (const char* s : {"2016-01-05 08:00:00", "2016-02-29 23:59:59", "1999-12-31 00:00:01"})
    CHECK(format_timestamp(ts(s)) == s);
  CHECK(format_date(CivilDate{2016, 1, 5}) == "2016-01-05");
  CHECK(format_month(MonthKey{2016, 1}) == "2016-01");
  CHECK(days_in_month(2016, 2) == 29);
  CHECK(days_in_month(2015, 2) == 28);
  CHECK(days_in_month(2016, 4) == 30);
}

TEST_CASE("quarter bucketing boundaries") {
  CHECK(quarter_of(ts("2016-01-05 08:00:00")) == QuarterKey{{2016, 1, 5}, 8, 1});
  CHECK(quarter_of(ts("2016-01-05 08:14:59")) == QuarterKey{{2016, 1, 5}, 8, 1});
  CHECK(quarter_of(ts("2016-01-05 08:15:00")) == QuarterKey{{2016, 1, 5}, 8, 2});
  CHECK(quarter_of(ts("2016-01-05 23:59:00")) == QuarterKey{{2016, 1, 5}, 23, 4});
  QuarterKey last{{2016, 1, 31}, 23, 4};
  CHECK(next_quarter(last) == QuarterKey{{2016, 2, 1}, 0, 1});
}

TEST_CASE("parse_trips maps rows to records") {
  std::istringstream in(
      "pickup_datetime,dropoff_datetime,trip_distance\n"
      "2016-01-05 08:00:00, 2016-01-05 08:20:00, 3.1\n");
  ParseResult r = parse_trips(in, TripSchema{"pickup_datetime", "dropoff_datetime",
                                             "trip_distance", ','});
  REQUIRE(r.records.size() == 1);
  CHECK(r.rows_read == 1);
  CHECK(r.failures == 0);
  CHECK(r.records[0].trip_distance == 3.1);
  CHECK(r.records[0].ride_time_hours() == doctest::Approx(20.0 / 60.0));
}

TEST_CASE("parse_trips counts malformed rows and keeps order") {
  std::istringstream in(
      "pickup_datetime,dropoff_datetime,trip_distance\n"
      "2016-01-05 08:00:00,2016-01-05 08:20:00,3.1\n"
      "2016-01-05 09:00:00,2016-01-05 09:10:00,\n"
      "2016-01-05 10:00:00,2016-01-05 10:30:00,2.0\n");
  ParseResult r = parse_trips(in, TripSchema{"pickup_datetime", "dropoff_datetime",
                                             "trip_distance", ','});
  CHECK(r.rows_read == 3);
  CHECK(r.failures == 1);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].trip_distance == 3.1);
  CHECK(r.records[1].trip_distance == 2.0);
  CHECK(r.records[0].pickup_time < r.records[1].pickup_time);
}

TEST_CASE("parse_trips rejects rows that would break record invariants") {
  std::istringstream in(
      "p,d,x\n"
      "2016-01-05 08:20:00,2016-01-05 08:00:00,3.1\n"   // dropoff before pickup
      "2016-01-05 08:00:00,2016-01-05 08:10:00,-1.0\n"  // negative distance
      "not a time,2016-01-05 08:10:00,1.0\n");
  ParseResult r = parse_trips(in, TripSchema{"p", "d", "x", ','});
  CHECK(r.rows_read == 3);
  CHECK(r.failures == 3);
  CHECK(r.records.empty());
}

TEST_CASE("parse_trips requires the configured columns") {
  std::istringstream in("pickup,dropoff,distance\n");
  try {
    parse_trips(in, TripSchema{"pickup_datetime", "dropoff", "distance", ','});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("pickup_datetime") != std::string::npos);
  }
}

TEST_CASE("parse_trips honors alternate delimiters and extra columns") {
  std::istringstream in(
      "vendor|pickup|drop|miles\n"
      "7|2016-01-05 08:00:00|2016-01-05 08:30:00|4.2\n");
  ParseResult r = parse_trips(in, TripSchema{"pickup", "drop", "miles", '|'});
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].trip_distance == 4.2);
}

TEST_CASE("cleaning rules and first-violation attribution") {
  CHECK(first_violated_rule(trip_s(kDay, 720, 0.0)) == 1);     // distance 0, 0.2 h
  CHECK(first_violated_rule(trip_s(kDay, 1800, 2.0)) == 0);    // 4 mph, retained
  CHECK(first_violated_rule(trip_s(kDay, 3600, 90.0)) == 3);   // 90 mph
  CHECK(first_violated_rule(trip_s(kDay, 14400, 1.0)) == 2);   // 4 h ride
  CHECK(first_violated_rule(trip_s(kDay, 14400, 0.0)) == 1);   // violates 1 and 2 -> 1
  CHECK(first_violated_rule(trip_s(kDay, 30, 1.0)) == 2);      // violates 2 and 3 -> 2

  SUBCASE("rule bounds are strict exactly as printed") {
    CHECK(first_violated_rule(trip_s(kDay, 60, 0.5)) == 2);     // exactly 1/60 h: rejected
    CHECK(first_violated_rule(trip_s(kDay, 61, 0.5)) == 0);     // just over: retained
    CHECK(first_violated_rule(trip_s(kDay, 10800, 5.0)) == 2);  // exactly 3 h: rejected
    CHECK(first_violated_rule(trip_s(kDay, 10799, 5.0)) == 0);
    CHECK(first_violated_rule(trip_s(kDay, 3600, 80.0)) == 0);  // exactly 80 mph: retained
    CHECK(first_violated_rule(trip_s(kDay, 3600, 80.1)) == 3);
  }
}

TEST_CASE("clean reports per-rule counts and reconciles") {
  std::vector<TripRecord> in = {
      trip_s(kDay, 1800, 2.0),          // keep
      trip_s(kDay + 100, 720, 0.0),     // rule 1
      trip_s(kDay + 200, 14400, 1.0),   // rule 2
      trip_s(kDay + 300, 3600, 90.0),   // rule 3
      trip_s(kDay + 400, 600, 1.0),     // keep
  };
  CleanResult r = clean(in);
  CHECK(r.report.total_read == 5);
  CHECK(r.report.rejected_by_rule[0] == 1);
  CHECK(r.report.rejected_by_rule[1] == 1);
  CHECK(r.report.rejected_by_rule[2] == 1);
  CHECK(r.report.retained == 2);
  CHECK(r.report.reconciles());
  REQUIRE(r.retained.size() == 2);
  CHECK(r.retained[0].pickup_time == kDay);

  SUBCASE("cleaning is idempotent") {
    CleanResult again = clean(r.retained);
    CHECK(again.report.retained == r.retained.size());
    CHECK(again.report.rejected_total() == 0);
  }
}

TEST_CASE("group_quarters aggregates by pickup quarter") {
  std::vector<TripRecord> in = {
      trip("2016-01-05 08:00:00", "2016-01-05 08:06:00", 1.0),  // 0.1 h
      trip("2016-01-05 08:10:00", "2016-01-05 08:22:00", 2.0),  // 0.2 h
  };
  GroupResult g = group_quarters(in, CivilDate{2016, 1, 5}, CivilDate{2016, 1, 5});
  REQUIRE(g.quarters.size() == 96);
  const QuarterRecord& q = g.quarters[8 * 4];  // hour 8, quarter 1
  CHECK(q.key == QuarterKey{{2016, 1, 5}, 8, 1});
  CHECK(q.trip_count == 2);
  CHECK(q.total_distance == doctest::Approx(3.0));
  CHECK(q.total_ride_time == doctest::Approx(0.3));
  CHECK(g.out_of_range == 0);

  std::uint64_t trips = 0;
  for (const auto& r : g.quarters) trips += r.trip_count;
  CHECK(trips == 2);
}

TEST_CASE("group_quarters emits zero quarters and stays sorted") {
  GroupResult g = group_quarters({}, CivilDate{2016, 1, 5}, CivilDate{2016, 1, 6});
  REQUIRE(g.quarters.size() == 192);
  CHECK(std::is_sorted(g.quarters.begin(), g.quarters.end(),
                       [](const auto& a, const auto& b) { return a.key < b.key; }));
  for (const auto& q : g.quarters) {
    CHECK(q.trip_count == 0);
    CHECK(q.total_distance == 0.0);
    CHECK(q.total_ride_time == 0.0);
  }
  CHECK(g.quarters.front().key == QuarterKey{{2016, 1, 5}, 0, 1});
  CHECK(g.quarters.back().key == QuarterKey{{2016, 1, 6}, 23, 4});
}

TEST_CASE("group_quarters boundary bucket and out-of-range count") {
  std::vector<TripRecord> in = {
      trip("2016-01-05 23:59:00", "2016-01-06 00:20:00", 5.0),
      trip("2016-01-07 10:00:00", "2016-01-07 10:20:00", 2.0),  // outside range
  };
  GroupResult g = group_quarters(in, CivilDate{2016, 1, 5}, CivilDate{2016, 1, 5});
  CHECK(g.out_of_range == 1);
  const QuarterRecord& q = g.quarters[23 * 4 + 3];
  CHECK(q.key == QuarterKey{{2016, 1, 5}, 23, 4});
  CHECK(q.trip_count == 1);
  CHECK(q.total_distance == 5.0);
}

TEST_CASE("group_quarters conserves distance over retained in-range trips") {
  std::vector<TripRecord> in;
  double total = 0.0;
  for (int i = 0; i < 500; ++i) {
    double d = 0.5 + (i % 17) * 0.25;
    in.push_back(trip_s(kDay + i * 97, 600 + (i % 11) * 60, d));
    total += d;
  }
  GroupResult g = group_quarters(in, CivilDate{2016, 1, 5}, CivilDate{2016, 1, 5});
  double sum = 0.0;
  for (const auto& q : g.quarters) sum += q.total_distance;
  CHECK(sum == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("quarter table round-trips through text") {
  std::vector<TripRecord> in = {
      trip("2016-01-05 08:00:00", "2016-01-05 08:06:00", 1.25),
      trip("2016-01-05 17:40:00", "2016-01-05 18:00:00", 7.5),
  };
  GroupResult g = group_quarters(in, CivilDate{2016, 1, 5}, CivilDate{2016, 1, 5});
  std::ostringstream out;
  write_quarters(out, g.quarters);
  std::istringstream back(out.str());
  std::vector<QuarterRecord> read = read_quarters(back);
  REQUIRE(read.size() == g.quarters.size());
  for (std::size_t i = 0; i < read.size(); ++i) {
    CHECK(read[i].key == g.quarters[i].key);
    CHECK(read[i].total_distance == g.quarters[i].total_distance);
    CHECK(read[i].total_ride_time == g.quarters[i].total_ride_time);
    CHECK(read[i].trip_count == g.quarters[i].trip_count);
  }
}

TEST_CASE("read_quarters rejects malformed tables") {
  std::istringstream bad_header("date,hour\n");
  CHECK_THROWS_AS(read_quarters(bad_header), DataError);
  std::istringstream bad_row(
      "date,hour,quarter,total_distance_mi,total_ride_time_h,trip_count\n"
      "2016-01-05,25,1,0,0,0\n");
  CHECK_THROWS_AS(read_quarters(bad_row), DataError);
}

TEST_CASE("cleaning report serializes the documented keys") {
  CleaningReport rep;
  rep.total_read = 10;
  rep.parse_failures = 1;
  rep.rejected_by_rule = {2, 3, 1};
  rep.retained = 3;
  KeyValueList kv = cleaning_report_kv(rep, 4);
  auto find = [&](const char* key) {
    for (const auto& [k, v] : kv)
      if (k == key) return v;
    return std::string("<missing>");
  };
  CHECK(find("total_read") == "10");
  CHECK(find("parse_failures") == "1");
  CHECK(find("rejected_rule1_distance") == "2");
  CHECK(find("rejected_rule2_ride_time") == "3");
  CHECK(find("rejected_rule3_speed") == "1");
  CHECK(find("retained") == "3");
  CHECK(find("out_of_range") == "4");
}
