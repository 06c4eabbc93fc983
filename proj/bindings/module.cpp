// Python bindings. Thin adapters only; all logic lives in h2sched_core.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <stdexcept>

#include "h2sched/demand.hpp"
#include "h2sched/rnn.hpp"
#include "h2sched/schedule.hpp"
#include "h2sched/time_util.hpp"
#include "h2sched/trips.hpp"

namespace py = pybind11;
using namespace h2sched;

namespace {

QuarterKey quarter_from_string(const std::string& ts) {
  auto sec = parse_timestamp(ts);
  if (!sec) throw std::invalid_argument("bad timestamp: " + ts);
  return quarter_of(*sec);
}

std::vector<QuarterKey> quarters_from_strings(const std::vector<std::string>& ts) {
  std::vector<QuarterKey> keys;
  keys.reserve(ts.size());
  for (const auto& s : ts) keys.push_back(quarter_from_string(s));
  return keys;
}

py::dict totals_dict(const DispatchTotals& t) {
  py::dict d;
  d["cost_cents"] = t.cost_cents;
  d["energy_kwh"] = t.energy_kwh;
  d["shortage_kg"] = t.shortage_kg;
  d["overflow_kg"] = t.overflow_kg;
  d["min_storage_kg"] = t.min_storage_kg;
  d["max_storage_kg"] = t.max_storage_kg;
  d["shortage_events"] = t.shortage_events;
  d["overflow_events"] = t.overflow_events;
  return d;
}

py::dict simulation_dict(const SimulationResult& r) {
  py::list energy, cost, storage, shortage, overflow;
  for (const auto& s : r.steps) {
    energy.append(s.energy_kwh);
    cost.append(s.cost_cents);
    storage.append(s.h_after_kg);
    shortage.append(s.shortage_kg);
    overflow.append(s.overflow_kg);
  }
  py::dict d;
  d["energy_kwh"] = energy;
  d["cost_cents"] = cost;
  d["h_after_kg"] = storage;
  d["shortage_kg"] = shortage;
  d["overflow_kg"] = overflow;
  d["totals"] = totals_dict(r.totals);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hydrogen refueling demand and dispatch toolkit";

  py::class_<Tariff>(m, "Tariff")
      .def(py::init<>())
      .def_readwrite("peak_start_hour", &Tariff::peak_start_hour)
      .def_readwrite("peak_end_hour", &Tariff::peak_end_hour)
      .def_readwrite("summer_start_month", &Tariff::summer_start_month)
      .def_readwrite("summer_start_day", &Tariff::summer_start_day)
      .def_readwrite("summer_end_month", &Tariff::summer_end_month)
      .def_readwrite("summer_end_day", &Tariff::summer_end_day)
      .def_readwrite("rate_peak_summer", &Tariff::rate_peak_summer)
      .def_readwrite("rate_peak_other", &Tariff::rate_peak_other)
      .def_readwrite("rate_offpeak", &Tariff::rate_offpeak);

  py::class_<PlantConfig>(m, "PlantConfig")
      .def(py::init([](double h_max_kg, double h_min_kg, double g_kg_per_kwh,
                       double e_max_kwh) {
             PlantConfig p{h_max_kg, h_min_kg, g_kg_per_kwh, e_max_kwh};
             p.validate();
             return p;
           }),
           py::arg("h_max_kg"), py::arg("h_min_kg"), py::arg("g_kg_per_kwh"),
           py::arg("e_max_kwh"))
      .def_readonly("h_max_kg", &PlantConfig::h_max_kg)
      .def_readonly("h_min_kg", &PlantConfig::h_min_kg)
      .def_readonly("g_kg_per_kwh", &PlantConfig::g_kg_per_kwh)
      .def_readonly("e_max_kwh", &PlantConfig::e_max_kwh);

  m.def(
      "is_peak",
      [](const std::string& ts, const Tariff& tariff) {
        return is_peak(quarter_from_string(ts), tariff);
      },
      py::arg("timestamp"), py::arg("tariff") = Tariff{});
  m.def(
      "rate_cents_per_kwh",
      [](const std::string& ts, const Tariff& tariff) {
        return rate_cents_per_kwh(quarter_from_string(ts), tariff);
      },
      py::arg("timestamp"), py::arg("tariff") = Tariff{});

  m.def("offpeak_dispatch", &offpeak_dispatch, py::arg("h_kg"), py::arg("w_kg"),
        py::arg("plant"));
  m.def("peak_dispatch", &peak_dispatch, py::arg("h_kg"), py::arg("w_kg"),
        py::arg("plant"));
  m.def(
      "step",
      [](double h_kg, double e_kwh, double actual_kg, const PlantConfig& plant) {
        StepResult r = step(h_kg, e_kwh, actual_kg, plant);
        return py::make_tuple(r.h_next, r.shortage, r.overflow);
      },
      py::arg("h_kg"), py::arg("e_kwh"), py::arg("actual_kg"), py::arg("plant"));

  m.def(
      "simulate",
      [](const std::vector<std::string>& timestamps, const std::vector<double>& forecast,
         const std::vector<double>& actual, const PlantConfig& plant, const Tariff& tariff,
         double h_initial_kg) {
        return simulation_dict(
            simulate(quarters_from_strings(timestamps), forecast, actual, plant, tariff,
                     h_initial_kg));
      },
      py::arg("timestamps"), py::arg("forecast_kg"), py::arg("actual_kg"),
      py::arg("plant"), py::arg("tariff"), py::arg("h_initial_kg"));
  m.def(
      "baseline_jit",
      [](const std::vector<std::string>& timestamps, const std::vector<double>& actual,
         const PlantConfig& plant, const Tariff& tariff, double h_initial_kg) {
        return simulation_dict(baseline_jit(quarters_from_strings(timestamps), actual,
                                            plant, tariff, h_initial_kg));
      },
      py::arg("timestamps"), py::arg("actual_kg"), py::arg("plant"), py::arg("tariff"),
      py::arg("h_initial_kg"));

  m.def(
      "clean_trips",
      [](const std::string& csv_text, const std::string& pickup_column,
         const std::string& dropoff_column, const std::string& distance_column,
         char delimiter) {
        std::istringstream in(csv_text);
        TripSchema schema{pickup_column, dropoff_column, distance_column, delimiter};
        ParseResult parsed = parse_trips(in, schema);
        CleanResult cleaned = clean(parsed.records);
        py::dict d;
        d["total_read"] = parsed.rows_read;
        d["parse_failures"] = parsed.failures;
        d["rejected_rule1_distance"] = cleaned.report.rejected_by_rule[0];
        d["rejected_rule2_ride_time"] = cleaned.report.rejected_by_rule[1];
        d["rejected_rule3_speed"] = cleaned.report.rejected_by_rule[2];
        d["retained"] = cleaned.report.retained;
        return d;
      },
      py::arg("csv_text"), py::arg("pickup_column") = "pickup_datetime",
      py::arg("dropoff_column") = "dropoff_datetime",
      py::arg("distance_column") = "trip_distance", py::arg("delimiter") = ',');

  m.def(
      "fit_fleet",
      [](const std::vector<double>& total_trips,
         const std::vector<double>& total_operating_hours) {
        if (total_trips.size() != total_operating_hours.size())
          throw std::invalid_argument("trips and hours must have equal length");
        std::vector<MonthlyAggregate> months(total_trips.size());
        for (std::size_t i = 0; i < months.size(); ++i) {
          months[i].month = MonthKey{2000 + int(i) / 12, 1 + int(i) % 12};
          months[i].total_trips = total_trips[i];
          months[i].total_operating_hours = total_operating_hours[i];
        }
        FleetFitResult r = fit_fleet(months);
        py::dict d;
        d["a"] = r.fit.a;
        d["b1"] = r.fit.b1;
        d["r_squared"] = r.r_squared;
        return d;
      },
      py::arg("total_trips"), py::arg("total_operating_hours"));

  m.def("estimate_fleet",
        [](double trips_in_hour, int days_in_month, double a, double b1) {
          return estimate_fleet(trips_in_hour, days_in_month, FleetFit{a, b1});
        },
        py::arg("trips_in_hour"), py::arg("days_in_month"), py::arg("a"), py::arg("b1"));

  m.def(
      "quarter_demand_kg",
      [](double total_distance_mi, double total_ride_time_h, std::uint64_t trip_count,
         double fleet, double mpge) {
        QuarterRecord q;
        q.total_distance = total_distance_mi;
        q.total_ride_time = total_ride_time_h;
        q.trip_count = trip_count;
        return quarter_demand_kg(q, fleet, mpge);
      },
      py::arg("total_distance_mi"), py::arg("total_ride_time_h"), py::arg("trip_count"),
      py::arg("fleet"), py::arg("mpge"));

  m.def(
      "train_forecaster",
      [](const std::vector<double>& series, int tau, int stride, std::uint64_t seed,
         double learning_rate, int max_iterations, int patience, int hidden_units,
         int stack_layers) {
        RnnDims dims{1, hidden_units, stack_layers, 1};
        WindowSet data = make_window_set(series, tau, stride, seed + 1);
        TrainConfig cfg;
        cfg.learning_rate = learning_rate;
        cfg.max_iterations = max_iterations;
        cfg.patience = patience;
        cfg.seed = seed;
        TrainResult result = train(init_model(dims, seed), data, cfg);
        py::list train_mse, val_mse, test_mse;
        for (const auto& s : result.history) {
          train_mse.append(s.train_mse);
          val_mse.append(s.val_mse);
          test_mse.append(s.test_mse);
        }
        py::dict d;
        d["iterations"] = result.history.size();
        d["best_iteration"] = result.best_iteration;
        d["train_mse"] = train_mse;
        d["val_mse"] = val_mse;
        d["test_mse"] = test_mse;
        d["next_hour_kg"] = forecast_next_hour(result.best, data.norm, series, tau);
        return d;
      },
      py::arg("series"), py::arg("tau"), py::arg("stride"), py::arg("seed"),
      py::arg("learning_rate") = 0.01, py::arg("max_iterations") = 100,
      py::arg("patience") = 30, py::arg("hidden_units") = 5, py::arg("stack_layers") = 4);
}
