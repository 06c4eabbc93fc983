#pragma once

#include <iosfwd>
#include <vector>

#include "h2sched/time_util.hpp"
#include "h2sched/trips.hpp"

namespace h2sched {

inline constexpr double kKgPerPound = 0.45359237;

// One row of the monthly fleet report: totals over a calendar month.
struct MonthlyAggregate {
  MonthKey month;
  double total_trips = 0.0;
  double total_operating_hours = 0.0;  // taxi-hours
  int days_in_month = 30;
};

// Linear map from hourly trip counts to taxis on road. b1 is the monthly
// intercept; the hourly intercept is b1 / (days_in_month * 24).
struct FleetFit {
  double a = 0.0;
  double b1 = 0.0;
};

struct FleetFitResult {
  FleetFit fit;
  double r_squared = 0.0;
  std::vector<double> residuals;      // per input month, observed - fitted hours
  std::vector<double> std_residuals;  // residual / sqrt(RSS / (n - 2))
  std::vector<bool> outlier;          // |standardized residual| > 3
};

// total_distance / total_ride_time in mph; 0 for a zero-trip quarter.
// Throws DataError if trips exist but ride time is zero (cleaning prevents this).
double average_speed(const QuarterRecord& q);

// Ordinary least squares of operating hours on trip counts. Needs at least
// two months with distinct trip totals.
FleetFitResult fit_fleet(const std::vector<MonthlyAggregate>& months);

// max(0, a * trips + b1 / (days_in_month * 24)).
double estimate_fleet(double trips_in_hour, int days_in_month, const FleetFit& fit);

// Hydrogen burned in one 15-minute quarter, in kg. mpge is miles per pound.
double quarter_demand_kg(const QuarterRecord& q, double fleet, double mpge);

struct DemandPoint {
  QuarterKey key;
  double demand_kg = 0.0;
  double avg_speed_mph = 0.0;
  double est_fleet = 0.0;
};

// Quarters must be gap-free and sorted (group_quarters output). The fleet is
// estimated once per hour from the hour's total trips and shared by its four
// quarters. Throws DataError naming any month absent from `months`.
std::vector<DemandPoint> build_demand_series(const std::vector<QuarterRecord>& quarters,
                                             const std::vector<MonthlyAggregate>& months,
                                             const FleetFit& fit, double mpge);

struct MonthlyDemand {
  MonthKey month;
  double demand_kg = 0.0;
};

std::vector<MonthlyDemand> monthly_demand(const std::vector<DemandPoint>& series);

// Monthly report input, header: month,total_trips,total_operating_hours,days_in_month
std::vector<MonthlyAggregate> read_monthlies(std::istream& in);

// Demand series I/O, header: date,hour,quarter,demand_kg,avg_speed_mph,est_fleet
void write_demand_series(std::ostream& out, const std::vector<DemandPoint>& series);
std::vector<DemandPoint> read_demand_series(std::istream& in);

}  // namespace h2sched
