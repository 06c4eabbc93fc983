#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "h2sched/text_io.hpp"
#include "h2sched/time_util.hpp"

namespace h2sched {

// Two-tier time-of-use tariff. Peak window is half-open [start, end) hours;
// the summer window is inclusive of both month/day endpoints.
struct Tariff {
  int peak_start_hour = 7;
  int peak_end_hour = 20;
  int summer_start_month = 6;
  int summer_start_day = 1;
  int summer_end_month = 9;
  int summer_end_day = 30;
  double rate_peak_summer = 27.61;  // cents/kWh
  double rate_peak_other = 13.60;
  double rate_offpeak = 1.01;

  void validate() const;
};

struct PlantConfig {
  double h_max_kg = 0.0;             // tank capacity
  double h_min_kg = 0.0;             // reserve level
  double g_kg_per_kwh = 1.0 / 55.0;  // hydrogen per unit electricity
  double e_max_kwh = 0.0;            // electrolyzer energy cap per 15-minute period

  static PlantConfig with_reserve_fraction(double h_max_kg, double fraction,
                                           double g_kg_per_kwh, double e_max_kwh);
  void validate() const;
};

bool in_summer(CivilDate d, const Tariff& tariff);
bool is_peak(const QuarterKey& t, const Tariff& tariff);
double rate_cents_per_kwh(const QuarterKey& t, const Tariff& tariff);

// Off-peak: produce as much as fits, min(E_max, (H_max + W - H) / G).
double offpeak_dispatch(double h_kg, double w_kg, const PlantConfig& plant);

// Peak: produce only what keeps storage at the reserve,
// max(0, (H_min + W - H) / G), capped at E_max.
double peak_dispatch(double h_kg, double w_kg, const PlantConfig& plant);

struct StepResult {
  double h_next = 0.0;
  double shortage = 0.0;  // demand that could not be served from the tank
  double overflow = 0.0;  // production curtailed at the tank ceiling
};

// Storage balance H + G*E - W, clamped to [0, H_max]; clamp amounts are
// reported, never dropped.
StepResult step(double h_kg, double e_kwh, double actual_kg, const PlantConfig& plant);

struct DispatchStep {
  QuarterKey time;
  bool peak = false;
  double rate = 0.0;  // cents/kWh
  double forecast_kg = 0.0;
  double actual_kg = 0.0;
  double energy_kwh = 0.0;
  double cost_cents = 0.0;
  double h_after_kg = 0.0;
  double shortage_kg = 0.0;
  double overflow_kg = 0.0;
};

struct DispatchTotals {
  double cost_cents = 0.0;
  double energy_kwh = 0.0;
  double shortage_kg = 0.0;
  double overflow_kg = 0.0;
  double min_storage_kg = 0.0;
  double max_storage_kg = 0.0;
  std::uint64_t shortage_events = 0;
  std::uint64_t overflow_events = 0;
};

struct SimulationResult {
  std::vector<DispatchStep> steps;
  DispatchTotals totals;
};

// Rolling per-period dispatch: the policy picks E from the FORECAST, storage
// advances with the ACTUAL demand. Series must be aligned and equal length.
SimulationResult simulate(const std::vector<QuarterKey>& times,
                          const std::vector<double>& forecast_kg,
                          const std::vector<double>& actual_kg,
                          const PlantConfig& plant, const Tariff& tariff,
                          double h_initial_kg);

// Price-blind comparator: produce each period's demand as it occurs,
// E = W / G capped at E_max.
SimulationResult baseline_jit(const std::vector<QuarterKey>& times,
                              const std::vector<double>& actual_kg,
                              const PlantConfig& plant, const Tariff& tariff,
                              double h_initial_kg);

// Schedule table, header: timestamp,is_peak,rate_cents_per_kwh,forecast_kg,
// actual_kg,E_kwh,cost_cents,H_after_kg,shortage_kg,overflow_kg
void write_schedule(std::ostream& out, const std::vector<DispatchStep>& steps);

KeyValueList totals_kv(const char* prefix, const DispatchTotals& totals);

}  // namespace h2sched
