#include "h2sched/schedule.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "h2sched/errors.hpp"

namespace h2sched {

void Tariff::validate() const {
  if (peak_start_hour < 0 || peak_start_hour > 23 || peak_end_hour < 1 ||
      peak_end_hour > 24 || peak_start_hour >= peak_end_hour)
    throw ConfigError("invalid peak window [" + std::to_string(peak_start_hour) + ", " +
                      std::to_string(peak_end_hour) + ")");
  if (summer_start_month < 1 || summer_start_month > 12 || summer_end_month < 1 ||
      summer_end_month > 12)
    throw ConfigError("invalid summer window months");
  if (!(rate_peak_summer > rate_offpeak) || !(rate_peak_other > rate_offpeak))
    throw ConfigError("peak rate must exceed the off-peak rate in every season");
}

PlantConfig PlantConfig::with_reserve_fraction(double h_max_kg, double fraction,
                                               double g_kg_per_kwh, double e_max_kwh) {
  PlantConfig p;
  p.h_max_kg = h_max_kg;
  p.h_min_kg = fraction * h_max_kg;
  p.g_kg_per_kwh = g_kg_per_kwh;
  p.e_max_kwh = e_max_kwh;
  p.validate();
  return p;
}

void PlantConfig::validate() const {
  if (!(h_max_kg > 0.0) || h_min_kg < 0.0 || h_min_kg >= h_max_kg)
    throw ConfigError("storage bounds need 0 <= H_min < H_max");
  if (!(g_kg_per_kwh > 0.0)) throw ConfigError("conversion rate G must be > 0");
  if (!(e_max_kwh > 0.0)) throw ConfigError("per-period energy cap E_max must be > 0");
}

bool in_summer(CivilDate d, const Tariff& tariff) {
  int md = d.month * 100 + d.day;
  int start = tariff.summer_start_month * 100 + tariff.summer_start_day;
  int end = tariff.summer_end_month * 100 + tariff.summer_end_day;
  return md >= start && md <= end;
}

bool is_peak(const QuarterKey& t, const Tariff& tariff) {
  return t.hour >= tariff.peak_start_hour && t.hour < tariff.peak_end_hour;
}

double rate_cents_per_kwh(const QuarterKey& t, const Tariff& tariff) {
  if (!is_peak(t, tariff)) return tariff.rate_offpeak;
  return in_summer(t.date, tariff) ? tariff.rate_peak_summer : tariff.rate_peak_other;
}

namespace {

void check_dispatch_inputs(double h_kg, double w_kg, const PlantConfig& plant) {
  plant.validate();
  if (h_kg < 0.0 || h_kg > plant.h_max_kg)
    throw std::invalid_argument("storage level " + format_double(h_kg) +
                                " outside [0, H_max]");
  if (w_kg < 0.0) throw std::invalid_argument("forecast demand must be >= 0");
}

}  // namespace

double offpeak_dispatch(double h_kg, double w_kg, const PlantConfig& plant) {
  check_dispatch_inputs(h_kg, w_kg, plant);
  return std::min(plant.e_max_kwh, (plant.h_max_kg + w_kg - h_kg) / plant.g_kg_per_kwh);
}

double peak_dispatch(double h_kg, double w_kg, const PlantConfig& plant) {
  check_dispatch_inputs(h_kg, w_kg, plant);
  double required = (plant.h_min_kg + w_kg - h_kg) / plant.g_kg_per_kwh;
  return std::min(plant.e_max_kwh, std::max(0.0, required));
}

StepResult step(double h_kg, double e_kwh, double actual_kg, const PlantConfig& plant) {
  plant.validate();
  if (h_kg < 0.0 || h_kg > plant.h_max_kg)
    throw std::invalid_argument("storage level outside [0, H_max]");
  if (e_kwh < 0.0 || actual_kg < 0.0)
    throw std::invalid_argument("energy and demand must be >= 0");

  double raw = h_kg + plant.g_kg_per_kwh * e_kwh - actual_kg;
  StepResult r;
  r.shortage = std::max(0.0, -raw);
  r.overflow = std::max(0.0, raw - plant.h_max_kg);
  r.h_next = std::clamp(raw, 0.0, plant.h_max_kg);
  return r;
}

namespace {

SimulationResult run_policy(const std::vector<QuarterKey>& times,
                            const std::vector<double>& forecast_kg,
                            const std::vector<double>& actual_kg,
                            const PlantConfig& plant, const Tariff& tariff,
                            double h_initial_kg, bool price_blind) {
  plant.validate();
  tariff.validate();
  if (times.size() != forecast_kg.size() || times.size() != actual_kg.size())
    throw ConfigError("timestamp/forecast/actual series lengths differ: " +
                      std::to_string(times.size()) + "/" +
                      std::to_string(forecast_kg.size()) + "/" +
                      std::to_string(actual_kg.size()));
  if (h_initial_kg < plant.h_min_kg || h_initial_kg > plant.h_max_kg)
    throw ConfigError("initial storage must lie in [H_min, H_max]");

  SimulationResult result;
  result.steps.reserve(times.size());
  result.totals.min_storage_kg = h_initial_kg;
  result.totals.max_storage_kg = h_initial_kg;

  double h = h_initial_kg;
  for (std::size_t k = 0; k < times.size(); ++k) {
    DispatchStep s;
    s.time = times[k];
    s.peak = is_peak(times[k], tariff);
    s.rate = rate_cents_per_kwh(times[k], tariff);
    s.forecast_kg = forecast_kg[k];
    s.actual_kg = actual_kg[k];
    if (s.forecast_kg < 0.0 || s.actual_kg < 0.0)
      throw ConfigError("demand series must be >= 0 (period " + std::to_string(k) + ")");

    if (price_blind) {
      s.energy_kwh = std::min(plant.e_max_kwh, s.actual_kg / plant.g_kg_per_kwh);
    } else {
      s.energy_kwh = s.peak ? peak_dispatch(h, s.forecast_kg, plant)
                            : offpeak_dispatch(h, s.forecast_kg, plant);
    }
    s.cost_cents = s.energy_kwh * s.rate;

    StepResult next = step(h, s.energy_kwh, s.actual_kg, plant);
    s.h_after_kg = next.h_next;
    s.shortage_kg = next.shortage;
    s.overflow_kg = next.overflow;
    h = next.h_next;

    result.totals.cost_cents += s.cost_cents;
    result.totals.energy_kwh += s.energy_kwh;
    result.totals.shortage_kg += s.shortage_kg;
    result.totals.overflow_kg += s.overflow_kg;
    result.totals.min_storage_kg = std::min(result.totals.min_storage_kg, h);
    result.totals.max_storage_kg = std::max(result.totals.max_storage_kg, h);
    if (s.shortage_kg > 0.0) ++result.totals.shortage_events;
    if (s.overflow_kg > 0.0) ++result.totals.overflow_events;
    result.steps.push_back(s);
  }
  return result;
}

}  // namespace

SimulationResult simulate(const std::vector<QuarterKey>& times,
                          const std::vector<double>& forecast_kg,
                          const std::vector<double>& actual_kg,
                          const PlantConfig& plant, const Tariff& tariff,
                          double h_initial_kg) {
  return run_policy(times, forecast_kg, actual_kg, plant, tariff, h_initial_kg, false);
}

SimulationResult baseline_jit(const std::vector<QuarterKey>& times,
                              const std::vector<double>& actual_kg,
                              const PlantConfig& plant, const Tariff& tariff,
                              double h_initial_kg) {
  return run_policy(times, actual_kg, actual_kg, plant, tariff, h_initial_kg, true);
}

void write_schedule(std::ostream& out, const std::vector<DispatchStep>& steps) {
  out << "timestamp,is_peak,rate_cents_per_kwh,forecast_kg,actual_kg,E_kwh,cost_cents,"
         "H_after_kg,shortage_kg,overflow_kg\n";
  for (const DispatchStep& s : steps) {
    out << format_timestamp(quarter_start_seconds(s.time)) << ',' << (s.peak ? 1 : 0)
        << ',' << format_double(s.rate) << ',' << format_double(s.forecast_kg) << ','
        << format_double(s.actual_kg) << ',' << format_double(s.energy_kwh) << ','
        << format_double(s.cost_cents) << ',' << format_double(s.h_after_kg) << ','
        << format_double(s.shortage_kg) << ',' << format_double(s.overflow_kg) << '\n';
  }
}

KeyValueList totals_kv(const char* prefix, const DispatchTotals& totals) {
  std::string p = prefix;
  return KeyValueList{
      {p + "_cost_cents", format_double(totals.cost_cents)},
      {p + "_energy_kwh", format_double(totals.energy_kwh)},
      {p + "_shortage_kg", format_double(totals.shortage_kg)},
      {p + "_overflow_kg", format_double(totals.overflow_kg)},
      {p + "_min_storage_kg", format_double(totals.min_storage_kg)},
      {p + "_max_storage_kg", format_double(totals.max_storage_kg)},
      {p + "_shortage_events", std::to_string(totals.shortage_events)},
      {p + "_overflow_events", std::to_string(totals.overflow_events)},
  };
}

}  // namespace h2sched
