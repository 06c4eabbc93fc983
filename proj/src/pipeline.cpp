#include "h2sched/pipeline.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <span>
#include <sstream>

#include "h2sched/demand.hpp"
#include "h2sched/errors.hpp"
#include "h2sched/text_io.hpp"
#include "h2sched/trips.hpp"

namespace h2sched {

namespace fs = std::filesystem;

std::string PipelineConfig::artifact_path(const char* name) const {
  return (fs::path(output_dir) / name).string();
}

namespace {

std::optional<std::pair<int, int>> parse_month_day(std::string_view s) {
  // "MM-DD"
  if (s.size() != 5 || s[2] != '-') return std::nullopt;
  auto m = parse_int(s.substr(0, 2));
  auto d = parse_int(s.substr(3, 2));
  if (!m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
  return std::make_pair(int(*m), int(*d));
}

struct ConfigParser {
  std::map<std::string, std::string> values;
  const std::string& path;

  bool has(const char* key) const { return values.count(key) > 0; }

  template <typename F>
  void take(const char* key, F&& apply) {
    auto it = values.find(key);
    if (it == values.end()) return;
    apply(it->second);
    values.erase(it);
  }

  [[noreturn]] void bad(const char* key, const std::string& value) const {
    throw ConfigError(path + ": bad value for " + key + ": '" + value + "'");
  }

  double number(const char* key, const std::string& v) {
    auto d = parse_double(v);
    if (!d) bad(key, v);
    return *d;
  }

  long long integer(const char* key, const std::string& v) {
    auto i = parse_int(v);
    if (!i) bad(key, v);
    return *i;
  }
};

PipelineConfig parse_config(const std::string& path, const KeyValueList& kv) {
  PipelineConfig cfg;
  ConfigParser p{{}, path};
  for (const auto& [k, v] : kv) {
    if (!p.values.emplace(k, v).second)
      throw ConfigError(path + ": duplicate key '" + k + "'");
  }

  p.take("trips_csv", [&](const std::string& v) { cfg.trips_csv = v; });
  p.take("monthlies_csv", [&](const std::string& v) { cfg.monthlies_csv = v; });
  p.take("forecast_csv", [&](const std::string& v) { cfg.forecast_csv = v; });
  p.take("output_dir", [&](const std::string& v) { cfg.output_dir = v; });
  p.take("pickup_column", [&](const std::string& v) { cfg.pickup_column = v; });
  p.take("dropoff_column", [&](const std::string& v) { cfg.dropoff_column = v; });
  p.take("distance_column", [&](const std::string& v) { cfg.distance_column = v; });
  p.take("csv_delimiter", [&](const std::string& v) {
    if (v.size() != 1) p.bad("csv_delimiter", v);
    cfg.csv_delimiter = v[0];
  });
  p.take("date_start", [&](const std::string& v) {
    auto d = parse_date(v);
    if (!d) p.bad("date_start", v);
    cfg.date_start = d;
  });
  p.take("date_end", [&](const std::string& v) {
    auto d = parse_date(v);
    if (!d) p.bad("date_end", v);
    cfg.date_end = d;
  });
  p.take("mpge_miles_per_lb",
         [&](const std::string& v) { cfg.mpge_miles_per_lb = p.number("mpge_miles_per_lb", v); });
  p.take("h_max_kg", [&](const std::string& v) { cfg.h_max_kg = p.number("h_max_kg", v); });
  p.take("h_min_fraction",
         [&](const std::string& v) { cfg.h_min_fraction = p.number("h_min_fraction", v); });
  p.take("kwh_per_kg", [&](const std::string& v) { cfg.kwh_per_kg = p.number("kwh_per_kg", v); });
  p.take("e_max_kwh", [&](const std::string& v) { cfg.e_max_kwh = p.number("e_max_kwh", v); });
  p.take("h_initial_kg",
         [&](const std::string& v) { cfg.h_initial_kg = p.number("h_initial_kg", v); });
  p.take("peak_start_hour", [&](const std::string& v) {
    cfg.tariff.peak_start_hour = int(p.integer("peak_start_hour", v));
  });
  p.take("peak_end_hour", [&](const std::string& v) {
    cfg.tariff.peak_end_hour = int(p.integer("peak_end_hour", v));
  });
  p.take("rate_peak_summer_cents", [&](const std::string& v) {
    cfg.tariff.rate_peak_summer = p.number("rate_peak_summer_cents", v);
  });
  p.take("rate_peak_other_cents", [&](const std::string& v) {
    cfg.tariff.rate_peak_other = p.number("rate_peak_other_cents", v);
  });
  p.take("rate_offpeak_cents", [&](const std::string& v) {
    cfg.tariff.rate_offpeak = p.number("rate_offpeak_cents", v);
  });
  p.take("summer_start", [&](const std::string& v) {
    auto md = parse_month_day(v);
    if (!md) p.bad("summer_start", v);
    cfg.tariff.summer_start_month = md->first;
    cfg.tariff.summer_start_day = md->second;
  });
  p.take("summer_end", [&](const std::string& v) {
    auto md = parse_month_day(v);
    if (!md) p.bad("summer_end", v);
    cfg.tariff.summer_end_month = md->first;
    cfg.tariff.summer_end_day = md->second;
  });
  p.take("hidden_units",
         [&](const std::string& v) { cfg.hidden_units = int(p.integer("hidden_units", v)); });
  p.take("stack_layers",
         [&](const std::string& v) { cfg.stack_layers = int(p.integer("stack_layers", v)); });
  p.take("tau", [&](const std::string& v) { cfg.tau = int(p.integer("tau", v)); });
  p.take("window_stride",
         [&](const std::string& v) { cfg.window_stride = int(p.integer("window_stride", v)); });
  p.take("learning_rate",
         [&](const std::string& v) { cfg.learning_rate = p.number("learning_rate", v); });
  p.take("max_iterations",
         [&](const std::string& v) { cfg.max_iterations = int(p.integer("max_iterations", v)); });
  p.take("patience", [&](const std::string& v) { cfg.patience = int(p.integer("patience", v)); });
  p.take("clip_norm", [&](const std::string& v) { cfg.clip_norm = p.number("clip_norm", v); });
  p.take("seed",
         [&](const std::string& v) { cfg.seed = std::uint64_t(p.integer("seed", v)); });

  if (!p.values.empty())
    throw ConfigError(path + ": unknown key '" + p.values.begin()->first + "'");

  // numeric sanity shared by every subcommand
  if (!(cfg.mpge_miles_per_lb > 0.0)) throw ConfigError(path + ": mpge_miles_per_lb must be > 0");
  if (!(cfg.h_max_kg > 0.0)) throw ConfigError(path + ": h_max_kg must be > 0");
  if (cfg.h_min_fraction < 0.0 || cfg.h_min_fraction >= 1.0)
    throw ConfigError(path + ": h_min_fraction must lie in [0, 1)");
  if (!(cfg.kwh_per_kg > 0.0)) throw ConfigError(path + ": kwh_per_kg must be > 0");
  if (!(cfg.e_max_kwh > 0.0)) throw ConfigError(path + ": e_max_kwh must be > 0");
  if (cfg.hidden_units < 1) throw ConfigError(path + ": hidden_units must be >= 1");
  if (cfg.stack_layers < 0) throw ConfigError(path + ": stack_layers must be >= 0");
  if (cfg.tau < 1) throw ConfigError(path + ": tau must be >= 1");
  if (cfg.window_stride < 0) throw ConfigError(path + ": window_stride must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError(path + ": learning_rate must be > 0");
  if (cfg.max_iterations < 1) throw ConfigError(path + ": max_iterations must be >= 1");
  if (cfg.patience < 1) throw ConfigError(path + ": patience must be >= 1");
  if (cfg.date_start && cfg.date_end && *cfg.date_end < *cfg.date_start)
    throw ConfigError(path + ": date_end precedes date_start");
  cfg.tariff.validate();
  return cfg;
}

void require_readable(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is not configured");
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot read ") + what + ": " + path);
}

void ensure_output_dir(const PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw DataError("cannot create output directory " + cfg.output_dir);
}

int run_guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 1;
  }
}

std::vector<double> demand_values(const std::vector<DemandPoint>& series) {
  std::vector<double> v;
  v.reserve(series.size());
  for (const auto& p : series) v.push_back(p.demand_kg);
  return v;
}

std::vector<QuarterKey> demand_times(const std::vector<DemandPoint>& series) {
  std::vector<QuarterKey> t;
  t.reserve(series.size());
  for (const auto& p : series) t.push_back(p.key);
  return t;
}

FleetFit read_fleet_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read fleet fit: " + path);
  FleetFit fit;
  bool have_a = false, have_b1 = false;
  for (const auto& [k, v] : read_kv(in)) {
    if (k == "a") {
      auto d = parse_double(v);
      if (!d) throw DataError(path + ": bad value for a");
      fit.a = *d;
      have_a = true;
    } else if (k == "b1") {
      auto d = parse_double(v);
      if (!d) throw DataError(path + ": bad value for b1");
      fit.b1 = *d;
      have_b1 = true;
    }
  }
  if (!have_a || !have_b1) throw DataError(path + ": missing a or b1");
  return fit;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  KeyValueList kv;
  try {
    kv = read_kv(in);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(path, kv);
}

int cmd_ingest(const PipelineConfig& cfg) {
  return run_guarded("ingest", [&] {
    require_readable(cfg.trips_csv, "trips file");
    std::ifstream in(cfg.trips_csv);
    TripSchema schema{cfg.pickup_column, cfg.dropoff_column, cfg.distance_column,
                      cfg.csv_delimiter};
    ParseResult parsed = parse_trips(in, schema);
    CleanResult cleaned = clean(parsed.records);
    cleaned.report.total_read = parsed.rows_read;
    cleaned.report.parse_failures = parsed.failures;

    CivilDate first, last;
    if (cfg.date_start && cfg.date_end) {
      first = *cfg.date_start;
      last = *cfg.date_end;
    } else if (!cleaned.retained.empty()) {
      auto [lo, hi] = std::minmax_element(
          cleaned.retained.begin(), cleaned.retained.end(),
          [](const TripRecord& a, const TripRecord& b) { return a.pickup_time < b.pickup_time; });
      first = cfg.date_start ? *cfg.date_start : date_of(lo->pickup_time);
      last = cfg.date_end ? *cfg.date_end : date_of(hi->pickup_time);
    } else {
      throw ConfigError("no retained trips and no date_start/date_end configured");
    }

    GroupResult grouped = group_quarters(cleaned.retained, first, last);

    ensure_output_dir(cfg);
    std::ostringstream quarters;
    write_quarters(quarters, grouped.quarters);
    write_text_file(cfg.artifact_path(artifact::kQuarters), quarters.str());

    std::ostringstream report;
    write_kv(report, cleaning_report_kv(cleaned.report, grouped.out_of_range));
    write_text_file(cfg.artifact_path(artifact::kCleaningReport), report.str());

    std::cout << "ingest: read " << cleaned.report.total_read << " rows, retained "
              << cleaned.report.retained << ", wrote " << grouped.quarters.size()
              << " quarters\n";
  });
}

int cmd_fit(const PipelineConfig& cfg) {
  return run_guarded("fit", [&] {
    require_readable(cfg.monthlies_csv, "monthly report");
    std::ifstream in(cfg.monthlies_csv);
    std::vector<MonthlyAggregate> months = read_monthlies(in);
    FleetFitResult result = fit_fleet(months);

    ensure_output_dir(cfg);
    std::uint64_t outliers = 0;
    for (bool flag : result.outlier) outliers += flag ? 1 : 0;
    std::ostringstream fit;
    write_kv(fit, KeyValueList{
                      {"a", format_double(result.fit.a)},
                      {"b1", format_double(result.fit.b1)},
                      {"r_squared", format_double(result.r_squared)},
                      {"months", std::to_string(months.size())},
                      {"outliers", std::to_string(outliers)},
                  });
    write_text_file(cfg.artifact_path(artifact::kFleetFit), fit.str());

    std::ostringstream res;
    res << "month,total_trips,total_operating_hours,fitted_hours,residual,std_residual,"
           "outlier\n";
    for (std::size_t i = 0; i < months.size(); ++i) {
      double fitted = result.fit.a * months[i].total_trips + result.fit.b1;
      res << format_month(months[i].month) << ',' << format_double(months[i].total_trips)
          << ',' << format_double(months[i].total_operating_hours) << ','
          << format_double(fitted) << ',' << format_double(result.residuals[i]) << ','
          << format_double(result.std_residuals[i]) << ',' << (result.outlier[i] ? 1 : 0)
          << '\n';
    }
    write_text_file(cfg.artifact_path(artifact::kFleetResiduals), res.str());

    std::cout << "fit: a = " << format_double(result.fit.a)
              << ", b1 = " << format_double(result.fit.b1)
              << ", r_squared = " << format_double(result.r_squared) << ", outliers = "
              << outliers << "\n";
  });
}

int cmd_demand(const PipelineConfig& cfg) {
  return run_guarded("demand", [&] {
    std::string quarters_path = cfg.artifact_path(artifact::kQuarters);
    require_readable(quarters_path, "quarter table");
    require_readable(cfg.monthlies_csv, "monthly report");
    FleetFit fit = read_fleet_fit(cfg.artifact_path(artifact::kFleetFit));

    std::ifstream qin(quarters_path);
    std::vector<QuarterRecord> quarters = read_quarters(qin);
    std::ifstream min(cfg.monthlies_csv);
    std::vector<MonthlyAggregate> months = read_monthlies(min);

    std::vector<DemandPoint> series =
        build_demand_series(quarters, months, fit, cfg.mpge_miles_per_lb);

    ensure_output_dir(cfg);
    std::ostringstream demand;
    write_demand_series(demand, series);
    write_text_file(cfg.artifact_path(artifact::kDemand), demand.str());

    std::ostringstream monthly;
    monthly << "month,demand_kg\n";
    for (const MonthlyDemand& m : monthly_demand(series))
      monthly << format_month(m.month) << ',' << format_double(m.demand_kg) << '\n';
    write_text_file(cfg.artifact_path(artifact::kMonthlyDemand), monthly.str());

    std::cout << "demand: wrote " << series.size() << " demand points\n";
  });
}

int cmd_train(const PipelineConfig& cfg) {
  return run_guarded("train", [&] {
    std::string demand_path = cfg.artifact_path(artifact::kDemand);
    require_readable(demand_path, "demand series");
    std::ifstream in(demand_path);
    std::vector<double> series = demand_values(read_demand_series(in));

    WindowSet windows;
    try {
      // split assignment draws from its own stream, one step off the weight seed
      windows = make_window_set(series, cfg.tau, cfg.effective_stride(), cfg.seed + 1);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("window construction failed: ") + e.what());
    }
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    for (Split s : windows.split) {
      if (s == Split::train) ++n_train;
      if (s == Split::validation) ++n_val;
      if (s == Split::test) ++n_test;
    }
    if (n_train < 3 || n_val < 3 || n_test < 3)
      throw ConfigError("need at least 3 windows per split, got " +
                        std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                        std::to_string(n_test));

    RnnModel model = init_model(cfg.rnn_dims(), cfg.seed);
    TrainResult result = train(std::move(model), windows, cfg.train_config());

    ensure_output_dir(cfg);
    save_model(cfg.artifact_path(artifact::kModel), result.best, windows.norm);

    std::ostringstream history;
    history << "iteration,train_mse,val_mse,test_mse\n";
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      const IterationStats& s = result.history[i];
      history << (i + 1) << ',' << format_double(s.train_mse) << ','
              << format_double(s.val_mse) << ',' << format_double(s.test_mse) << '\n';
    }
    write_text_file(cfg.artifact_path(artifact::kHistory), history.str());

    std::cout << "train: " << result.history.size() << " iterations, best at iteration "
              << result.best_iteration << "\n";
  });
}

int cmd_schedule(const PipelineConfig& cfg, bool perfect_forecast) {
  return run_guarded("schedule", [&] {
    std::string demand_path = cfg.artifact_path(artifact::kDemand);
    require_readable(demand_path, "demand series");
    std::ifstream in(demand_path);
    std::vector<DemandPoint> series = read_demand_series(in);
    if (series.empty()) throw ConfigError("demand series is empty");

    std::vector<QuarterKey> times = demand_times(series);
    std::vector<double> actuals = demand_values(series);
    std::vector<double> forecasts;

    if (perfect_forecast) {
      forecasts = actuals;
    } else if (!cfg.forecast_csv.empty()) {
      require_readable(cfg.forecast_csv, "forecast series");
      std::ifstream fin(cfg.forecast_csv);
      std::vector<DemandPoint> fseries = read_demand_series(fin);
      if (fseries.size() != series.size())
        throw ConfigError("forecast series length " + std::to_string(fseries.size()) +
                          " does not match demand series length " +
                          std::to_string(series.size()));
      for (std::size_t i = 0; i < fseries.size(); ++i) {
        if (fseries[i].key != series[i].key)
          throw ConfigError("forecast series timestamps are misaligned at row " +
                            std::to_string(i + 2));
        forecasts.push_back(fseries[i].demand_kg);
      }
    } else {
      LoadedModel loaded = load_model(cfg.artifact_path(artifact::kModel), cfg.rnn_dims());
      if (series.size() <= std::size_t(cfg.tau))
        throw ConfigError("demand series too short to roll the forecaster: need more than " +
                          std::to_string(cfg.tau) + " points");
      // Roll the forecaster: period k gets a quarter share of the next-hour
      // forecast made from history up to k-1.
      std::vector<QuarterKey> t2;
      std::vector<double> a2, f2;
      for (std::size_t k = std::size_t(cfg.tau); k < series.size(); ++k) {
        double next_hour = forecast_next_hour(
            loaded.model, loaded.norm,
            std::span<const double>(actuals.data(), k), cfg.tau);
        t2.push_back(times[k]);
        a2.push_back(actuals[k]);
        f2.push_back(next_hour / 4.0);
      }
      times = std::move(t2);
      actuals = std::move(a2);
      forecasts = std::move(f2);
    }

    PlantConfig plant = cfg.plant();
    double h_initial = cfg.h_initial_kg.value_or(plant.h_max_kg);
    SimulationResult policy =
        simulate(times, forecasts, actuals, plant, cfg.tariff, h_initial);
    SimulationResult baseline =
        baseline_jit(times, actuals, plant, cfg.tariff, h_initial);

    ensure_output_dir(cfg);
    std::ostringstream table;
    write_schedule(table, policy.steps);
    write_text_file(cfg.artifact_path(artifact::kSchedule), table.str());

    double savings_pct =
        baseline.totals.cost_cents > 0.0
            ? (baseline.totals.cost_cents - policy.totals.cost_cents) /
                  baseline.totals.cost_cents * 100.0
            : 0.0;
    KeyValueList totals = totals_kv("policy", policy.totals);
    KeyValueList base = totals_kv("baseline", baseline.totals);
    totals.insert(totals.end(), base.begin(), base.end());
    totals.emplace_back("savings_percent", format_double(savings_pct));
    std::ostringstream totals_text;
    write_kv(totals_text, totals);
    write_text_file(cfg.artifact_path(artifact::kScheduleTotals), totals_text.str());

    std::cout << "schedule: " << policy.steps.size() << " periods, cost "
              << format_double(policy.totals.cost_cents) << " cents vs baseline "
              << format_double(baseline.totals.cost_cents) << " (" << format_double(savings_pct)
              << "% savings)\n";
  });
}

namespace {

struct Bundle {
  const char* file;
  std::string columns;
};

std::vector<std::vector<std::string>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line, ','));
  }
  return rows;
}

std::string project_columns(const std::vector<std::vector<std::string>>& rows,
                            const std::vector<std::size_t>& cols) {
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out << ',';
      out << row.at(cols[i]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

int cmd_report(const PipelineConfig& cfg) {
  return run_guarded("report", [&] {
    const char* needed[] = {artifact::kSchedule, artifact::kFleetResiduals,
                            artifact::kMonthlyDemand, artifact::kHistory};
    for (const char* name : needed) {
      if (!fs::exists(cfg.artifact_path(name)))
        throw ConfigError(std::string("missing artifact ") + name +
                          "; run the producing subcommand first");
    }

    fs::path report_dir = fs::path(cfg.output_dir) / artifact::kReportDir;
    std::error_code ec;
    fs::create_directories(report_dir, ec);
    if (ec) throw DataError("cannot create report directory " + report_dir.string());

    auto schedule_rows = read_table(cfg.artifact_path(artifact::kSchedule));
    // schedule columns: 0 timestamp, 1 is_peak, 2 rate, 3 forecast, 4 actual,
    // 5 E, 6 cost, 7 H_after, 8 shortage, 9 overflow
    write_text_file((report_dir / "power_schedule.csv").string(),
                    project_columns(schedule_rows, {0, 1, 2, 5, 6}));
    write_text_file((report_dir / "storage_levels.csv").string(),
                    project_columns(schedule_rows, {0, 7, 8, 9}));
    write_text_file((report_dir / "fleet_regression.csv").string(),
                    read_text_file(cfg.artifact_path(artifact::kFleetResiduals)));
    write_text_file((report_dir / "monthly_demand.csv").string(),
                    read_text_file(cfg.artifact_path(artifact::kMonthlyDemand)));
    write_text_file((report_dir / "training_history.csv").string(),
                    read_text_file(cfg.artifact_path(artifact::kHistory)));

    Bundle bundles[] = {
        {"power_schedule.csv", "timestamp,is_peak,rate_cents_per_kwh,E_kwh,cost_cents"},
        {"storage_levels.csv", "timestamp,H_after_kg,shortage_kg,overflow_kg"},
        {"fleet_regression.csv",
         "month,total_trips,total_operating_hours,fitted_hours,residual,std_residual,"
         "outlier"},
        {"monthly_demand.csv", "month,demand_kg"},
        {"training_history.csv", "iteration,train_mse,val_mse,test_mse"},
    };
    std::ostringstream manifest;
    for (const Bundle& b : bundles) manifest << b.file << ": " << b.columns << '\n';
    write_text_file((report_dir / "manifest.txt").string(), manifest.str());

    std::cout << "report: wrote " << std::size(bundles) << " bundles to "
              << report_dir.string() << "\n";
  });
}

}  // namespace h2sched
