#include "h2sched/demand.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "h2sched/errors.hpp"
#include "h2sched/text_io.hpp"

namespace h2sched {

double average_speed(const QuarterRecord& q) {
  if (q.trip_count == 0) return 0.0;
  if (q.total_ride_time <= 0.0)
    throw DataError("quarter " + format_date(q.key.date) + " hour " +
                    std::to_string(q.key.hour) + " has trips but zero ride time");
  return q.total_distance / q.total_ride_time;
}

FleetFitResult fit_fleet(const std::vector<MonthlyAggregate>& months) {
  std::size_t n = months.size();
  if (n < 2) throw ConfigError("fleet fit needs at least 2 months, got " + std::to_string(n));

  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& m : months) {
    mean_x += m.total_trips;
    mean_y += m.total_operating_hours;
  }
  mean_x /= double(n);
  mean_y /= double(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& m : months) {
    double dx = m.total_trips - mean_x;
    double dy = m.total_operating_hours - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0)
    throw ConfigError("fleet fit is singular: all months have identical trip totals");

  FleetFitResult result;
  result.fit.a = sxy / sxx;
  result.fit.b1 = mean_y - result.fit.a * mean_x;

  double rss = 0.0;
  result.residuals.reserve(n);
  for (const auto& m : months) {
    double fitted = result.fit.a * m.total_trips + result.fit.b1;
    double r = m.total_operating_hours - fitted;
    result.residuals.push_back(r);
    rss += r * r;
  }
  result.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;

  double sigma = n > 2 ? std::sqrt(rss / double(n - 2)) : 0.0;
  result.std_residuals.reserve(n);
  result.outlier.reserve(n);
  for (double r : result.residuals) {
    double sr = sigma > 0.0 ? r / sigma : 0.0;
    result.std_residuals.push_back(sr);
    result.outlier.push_back(std::abs(sr) > 3.0);
  }
  return result;
}

double estimate_fleet(double trips_in_hour, int days_in_month, const FleetFit& fit) {
  double b = fit.b1 / (double(days_in_month) * 24.0);
  double raw = fit.a * trips_in_hour + b;
  return raw > 0.0 ? raw : 0.0;
}

double quarter_demand_kg(const QuarterRecord& q, double fleet, double mpge) {
  if (!(mpge > 0.0)) throw ConfigError("mpge must be positive");
  double miles = average_speed(q) * fleet * 0.25;  // 15-minute period
  return miles / mpge * kKgPerPound;
}

std::vector<DemandPoint> build_demand_series(const std::vector<QuarterRecord>& quarters,
                                             const std::vector<MonthlyAggregate>& months,
                                             const FleetFit& fit, double mpge) {
  if (!(mpge > 0.0)) throw ConfigError("mpge must be positive");
  if (quarters.size() % 4 != 0)
    throw DataError("quarter series is not gap-free: length not a multiple of 4");

  std::map<MonthKey, int> days_by_month;
  for (const auto& m : months) days_by_month[m.month] = m.days_in_month;

  std::vector<DemandPoint> series;
  series.reserve(quarters.size());
  for (std::size_t i = 0; i < quarters.size(); i += 4) {
    double hour_trips = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const QuarterRecord& q = quarters[i + j];
      if (q.key.quarter != int(j) + 1 || q.key.date != quarters[i].key.date ||
          q.key.hour != quarters[i].key.hour)
        throw DataError("quarter series is not gap-free around " +
                        format_date(q.key.date) + " hour " + std::to_string(q.key.hour));
      hour_trips += double(q.trip_count);
    }
    auto it = days_by_month.find(month_of(quarters[i].key.date));
    if (it == days_by_month.end())
      throw DataError("no monthly aggregate for month " +
                      format_month(month_of(quarters[i].key.date)));
    double fleet = estimate_fleet(hour_trips, it->second, fit);
    for (std::size_t j = 0; j < 4; ++j) {
      const QuarterRecord& q = quarters[i + j];
      DemandPoint p;
      p.key = q.key;
      p.avg_speed_mph = average_speed(q);
      p.est_fleet = fleet;
      p.demand_kg = quarter_demand_kg(q, fleet, mpge);
      series.push_back(p);
    }
  }
  return series;
}

std::vector<MonthlyDemand> monthly_demand(const std::vector<DemandPoint>& series) {
  std::map<MonthKey, double> totals;
  for (const DemandPoint& p : series) totals[month_of(p.key.date)] += p.demand_kg;
  std::vector<MonthlyDemand> out;
  out.reserve(totals.size());
  for (const auto& [month, kg] : totals) out.push_back(MonthlyDemand{month, kg});
  return out;
}

std::vector<MonthlyAggregate> read_monthlies(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("monthly report is empty");
  if (trim(line) != "month,total_trips,total_operating_hours,days_in_month")
    throw DataError("unexpected monthly report header: " + line);
  std::vector<MonthlyAggregate> months;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != 4)
      throw DataError("monthly report row " + std::to_string(row) + ": expected 4 fields");
    auto month = parse_month(fields[0]);
    auto trips = parse_double(fields[1]);
    auto hours = parse_double(fields[2]);
    auto days = parse_int(fields[3]);
    if (!month || !trips || !hours || !days || *trips < 0 || *hours < 0 || *days < 28 ||
        *days > 31)
      throw DataError("monthly report row " + std::to_string(row) + ": malformed values");
    months.push_back(MonthlyAggregate{*month, *trips, *hours, int(*days)});
  }
  return months;
}

void write_demand_series(std::ostream& out, const std::vector<DemandPoint>& series) {
  out << "date,hour,quarter,demand_kg,avg_speed_mph,est_fleet\n";
  for (const DemandPoint& p : series) {
    out << format_date(p.key.date) << ',' << p.key.hour << ',' << p.key.quarter << ','
        << format_double(p.demand_kg) << ',' << format_double(p.avg_speed_mph) << ','
        << format_double(p.est_fleet) << '\n';
  }
}

std::vector<DemandPoint> read_demand_series(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("demand series is empty");
  if (trim(line) != "date,hour,quarter,demand_kg,avg_speed_mph,est_fleet")
    throw DataError("unexpected demand series header: " + line);
  std::vector<DemandPoint> series;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != 6)
      throw DataError("demand series row " + std::to_string(row) + ": expected 6 fields");
    auto date = parse_date(fields[0]);
    auto hour = parse_int(fields[1]);
    auto quarter = parse_int(fields[2]);
    auto demand = parse_double(fields[3]);
    auto speed = parse_double(fields[4]);
    auto fleet = parse_double(fields[5]);
    if (!date || !hour || !quarter || !demand || !speed || !fleet || *hour < 0 ||
        *hour > 23 || *quarter < 1 || *quarter > 4)
      throw DataError("demand series row " + std::to_string(row) + ": malformed values");
    DemandPoint p;
    p.key = QuarterKey{*date, int(*hour), int(*quarter)};
    p.demand_kg = *demand;
    p.avg_speed_mph = *speed;
    p.est_fleet = *fleet;
    series.push_back(p);
  }
  return series;
}

}  // namespace h2sched
