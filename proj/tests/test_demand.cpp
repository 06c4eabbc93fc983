#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "h2sched/demand.hpp"
#include "h2sched/errors.hpp"

using namespace h2sched;

namespace {

QuarterRecord quarter(double dist, double time_h, std::uint64_t count) {
  QuarterRecord q;
  q.total_distance = dist;
  q.total_ride_time = time_h;
  q.trip_count = count;
  return q;
}

MonthlyAggregate month(int y, int m, double trips, double hours, int days) {
  return MonthlyAggregate{MonthKey{y, m}, trips, hours, days};
}

}  // namespace

TEST_CASE("average_speed is distance over ride time") {
  CHECK(average_speed(quarter(3.0, 0.3, 4)) == doctest::Approx(10.0));
  CHECK(average_speed(quarter(80.0, 1.0, 1)) == 80.0);
  CHECK(average_speed(quarter(0.0, 0.0, 0)) == 0.0);  // zero-trip convention
  CHECK_THROWS_AS(average_speed(quarter(1.0, 0.0, 2)), DataError);
}

TEST_CASE("fit_fleet solves two points exactly") {
  FleetFitResult r = fit_fleet({month(2016, 1, 0.0, 5.0, 31), month(2016, 2, 10.0, 25.0, 29)});
  CHECK(r.fit.a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.fit.b1 == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r.r_squared == doctest::Approx(1.0));
}

TEST_CASE("fit_fleet recovers the generating line on noiseless data") {
  const double a = 0.247, b1 = 2e6;
  std::vector<MonthlyAggregate> months;
  for (int i = 0; i < 24; ++i) {
    double trips = 1.0e6 + 2.0e5 * i;
    months.push_back(month(2014 + i / 12, 1 + i % 12, trips, a * trips + b1, 30));
  }
  FleetFitResult r = fit_fleet(months);
  CHECK(std::abs(r.fit.a - a) / a < 1e-9);
  CHECK(std::abs(r.fit.b1 - b1) / b1 < 1e-9);
  CHECK(r.r_squared == doctest::Approx(1.0));
  for (double sr : r.std_residuals) CHECK(std::abs(sr) < 1e-6);
}

TEST_CASE("fit_fleet handles flat response and rejects singular input") {
  FleetFitResult flat = fit_fleet(
      {month(2016, 1, 5.0, 7.0, 31), month(2016, 2, 9.0, 7.0, 29), month(2016, 3, 13.0, 7.0, 31)});
  CHECK(flat.fit.a == doctest::Approx(0.0));
  CHECK_THROWS_AS(fit_fleet({month(2016, 1, 5.0, 7.0, 31), month(2016, 2, 5.0, 9.0, 29)}),
                  ConfigError);
  CHECK_THROWS_AS(fit_fleet({month(2016, 1, 5.0, 7.0, 31)}), ConfigError);
}

TEST_CASE("fit_fleet flags a dropped month as outlier") {
  // y = 2x + 500 except month 7, whose hours are cut 40%
  std::vector<MonthlyAggregate> months;
  for (int i = 0; i < 13; ++i) {
    double trips = 1000.0 * (i + 1);
    double hours = 2.0 * trips + 500.0;
    if (i == 6) hours *= 0.6;
    months.push_back(month(2015 + i / 12, 1 + i % 12, trips, hours, 30));
  }
  FleetFitResult r = fit_fleet(months);
  for (std::size_t i = 0; i < r.outlier.size(); ++i) CHECK(r.outlier[i] == (i == 6));
  CHECK(r.std_residuals[6] == doctest::Approx(-3.1865).epsilon(1e-3));
}

TEST_CASE("estimate_fleet applies the hourly intercept and clamps") {
  FleetFit fit{0.247, 2e6};
  CHECK(estimate_fleet(2000.0, 30, fit) == doctest::Approx(3271.777777777778));
  CHECK(estimate_fleet(0.0, 30, FleetFit{0.247, 0.0}) == 0.0);
  CHECK(estimate_fleet(1.0, 30, FleetFit{0.001, -1000.0}) == 0.0);  // clamped
}

TEST_CASE("quarter_demand_kg converts pounds at the exact factor") {
  // speed 10 mph, fleet 12000, mpge 30 -> 1000 lb
  QuarterRecord q = quarter(2.5, 0.25, 8);
  CHECK(quarter_demand_kg(q, 12000.0, 30.0) == doctest::Approx(453.59237).epsilon(1e-12));
  CHECK(quarter_demand_kg(quarter(0.0, 0.0, 0), 12000.0, 30.0) == 0.0);
  CHECK(quarter_demand_kg(q, 0.0, 30.0) == 0.0);
  CHECK_THROWS_AS(quarter_demand_kg(q, 100.0, 0.0), ConfigError);
  CHECK_THROWS_AS(quarter_demand_kg(q, 100.0, -3.0), ConfigError);

  SUBCASE("linear in fleet, inverse in mpge") {
    double base = quarter_demand_kg(q, 100.0, 30.0);
    CHECK(quarter_demand_kg(q, 200.0, 30.0) == doctest::Approx(2 * base));
    CHECK(quarter_demand_kg(q, 100.0, 15.0) == doctest::Approx(2 * base));
  }
}

TEST_CASE("build_demand_series matches the hand-computed two-hour fixture") {
  // 2016-01 (31 days), a = 0.1, b1 = 744 -> hourly intercept exactly 1
  std::vector<QuarterRecord> quarters;
  double dist[] = {2.0, 5.0, 3.0, 8.0};
  double time[] = {0.25, 0.5, 0.25, 0.5};
  std::uint64_t trips[] = {10, 20, 30, 40};
  QuarterKey key{{2016, 1, 5}, 0, 1};
  for (int i = 0; i < 4; ++i) {
    QuarterRecord q = quarter(dist[i], time[i], trips[i]);
    q.key = key;
    quarters.push_back(q);
    key = next_quarter(key);
  }
  for (int i = 0; i < 4; ++i) {
    QuarterRecord q = quarter(0.0, 0.0, 0);
    q.key = key;
    quarters.push_back(q);
    key = next_quarter(key);
  }
  std::vector<DemandPoint> series = build_demand_series(
      quarters, {month(2016, 1, 1000.0, 0.0, 31)}, FleetFit{0.1, 744.0}, 16.0);
  REQUIRE(series.size() == 8);

  // hour 0: 100 trips -> fleet 11; speeds 8/10/12/16
  double expect_speed[] = {8.0, 10.0, 12.0, 16.0};
  double expect_kg[] = {0.6236895087500001, 0.7796118859375001, 0.9355342631250001,
                        1.2473790175000001};
  for (int i = 0; i < 4; ++i) {
    CHECK(series[i].est_fleet == 11.0);
    CHECK(series[i].avg_speed_mph == expect_speed[i]);
    CHECK(series[i].demand_kg == doctest::Approx(expect_kg[i]).epsilon(1e-12));
  }
  // hour 1: no trips -> fleet from intercept alone, zero demand
  for (int i = 4; i < 8; ++i) {
    CHECK(series[i].est_fleet == 1.0);
    CHECK(series[i].avg_speed_mph == 0.0);
    CHECK(series[i].demand_kg == 0.0);
  }
}

TEST_CASE("build_demand_series validates inputs") {
  std::vector<QuarterRecord> quarters;
  QuarterKey key{{2016, 1, 5}, 0, 1};
  for (int i = 0; i < 4; ++i) {
    QuarterRecord q = quarter(1.0, 0.1, 1);
    q.key = key;
    quarters.push_back(q);
    key = next_quarter(key);
  }

  SUBCASE("missing month is named") {
    try {
      build_demand_series(quarters, {month(2016, 2, 10.0, 0.0, 29)}, FleetFit{1.0, 0.0}, 30.0);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("2016-01") != std::string::npos);
    }
  }

  SUBCASE("gaps are rejected") {
    quarters.erase(quarters.begin() + 1);
    CHECK_THROWS_AS(build_demand_series(quarters, {month(2016, 1, 10.0, 0.0, 31)},
                                        FleetFit{1.0, 0.0}, 30.0),
                    DataError);
  }

  SUBCASE("output length equals input length") {
    auto series = build_demand_series(quarters, {month(2016, 1, 10.0, 0.0, 31)},
                                      FleetFit{1.0, 0.0}, 30.0);
    CHECK(series.size() == quarters.size());
  }
}

TEST_CASE("zero quarters give zero demand") {
  std::vector<QuarterRecord> quarters;
  QuarterKey key{{2016, 3, 1}, 0, 1};
  for (int i = 0; i < 96; ++i) {
    QuarterRecord q = quarter(0.0, 0.0, 0);
    q.key = key;
    quarters.push_back(q);
    key = next_quarter(key);
  }
  auto series = build_demand_series(quarters, {month(2016, 3, 0.0, 0.0, 31)},
                                    FleetFit{0.5, 1000.0}, 30.0);
  for (const auto& p : series) CHECK(p.demand_kg == 0.0);
}

TEST_CASE("monthly_demand sums by calendar month") {
  std::vector<DemandPoint> series;
  QuarterKey key{{2016, 1, 31}, 22, 1};
  for (int i = 0; i < 96; ++i) {  // crosses into February
    DemandPoint p;
    p.key = key;
    p.demand_kg = 1.0;
    series.push_back(p);
    key = next_quarter(key);
  }
  auto totals = monthly_demand(series);
  REQUIRE(totals.size() == 2);
  CHECK(totals[0].month == MonthKey{2016, 1});
  CHECK(totals[0].demand_kg == doctest::Approx(8.0));  // 22:00-24:00 of Jan 31
  CHECK(totals[1].month == MonthKey{2016, 2});
  CHECK(totals[1].demand_kg == doctest::Approx(88.0));
}

TEST_CASE("monthly report parsing") {
  std::istringstream in(
      "month,total_trips,total_operating_hours,days_in_month\n"
      "2016-01,1000000,2500000,31\n"
      "2016-02,900000,2300000,29\n");
  auto months = read_monthlies(in);
  REQUIRE(months.size() == 2);
  CHECK(months[0].month == MonthKey{2016, 1});
  CHECK(months[0].total_trips == 1000000.0);
  CHECK(months[1].days_in_month == 29);

  std::istringstream bad_days(
      "month,total_trips,total_operating_hours,days_in_month\n"
      "2016-01,10,10,45\n");
  CHECK_THROWS_AS(read_monthlies(bad_days), DataError);
  std::istringstream bad_header("month,trips\n");
  CHECK_THROWS_AS(read_monthlies(bad_header), DataError);
}

TEST_CASE("demand series round-trips through text") {
  std::vector<DemandPoint> series;
  QuarterKey key{{2016, 1, 5}, 7, 1};
  for (int i = 0; i < 6; ++i) {
    DemandPoint p;
    p.key = key;
    p.demand_kg = 10.0 + i * 0.375;
    p.avg_speed_mph = 12.5 - i;
    p.est_fleet = 5000.0 + i;
    series.push_back(p);
    key = next_quarter(key);
  }
  std::ostringstream out;
  write_demand_series(out, series);
  std::istringstream back(out.str());
  auto read = read_demand_series(back);
  REQUIRE(read.size() == series.size());
  for (std::size_t i = 0; i < read.size(); ++i) {
    CHECK(read[i].key == series[i].key);
    CHECK(read[i].demand_kg == series[i].demand_kg);
    CHECK(read[i].avg_speed_mph == series[i].avg_speed_mph);
    CHECK(read[i].est_fleet == series[i].est_fleet);
  }
}
