#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "h2sched/rnn.hpp"
#include "h2sched/schedule.hpp"
#include "h2sched/time_util.hpp"

namespace h2sched {

// Artifact names inside the configured output directory.
namespace artifact {
inline constexpr char kQuarters[] = "quarters.csv";
inline constexpr char kCleaningReport[] = "cleaning_report.txt";
inline constexpr char kFleetFit[] = "fleet_fit.txt";
inline constexpr char kFleetResiduals[] = "fleet_residuals.csv";
inline constexpr char kDemand[] = "demand.csv";
inline constexpr char kMonthlyDemand[] = "monthly_demand.csv";
inline constexpr char kModel[] = "model.txt";
inline constexpr char kHistory[] = "history.csv";
inline constexpr char kSchedule[] = "schedule.csv";
inline constexpr char kScheduleTotals[] = "schedule_totals.txt";
inline constexpr char kReportDir[] = "report";
}  // namespace artifact

struct PipelineConfig {
  // inputs and artifacts
  std::string trips_csv;
  std::string monthlies_csv;
  std::string forecast_csv;  // optional externally supplied forecast series
  std::string output_dir = "out";

  // trip file schema
  std::string pickup_column = "pickup_datetime";
  std::string dropoff_column = "dropoff_datetime";
  std::string distance_column = "trip_distance";
  char csv_delimiter = ',';

  // grouping range; inferred from the data when unset
  std::optional<CivilDate> date_start;
  std::optional<CivilDate> date_end;

  // demand model
  double mpge_miles_per_lb = 30.0;

  // plant
  double h_max_kg = 1000.0;
  double h_min_fraction = 0.10;
  double kwh_per_kg = 55.0;
  double e_max_kwh = 22000.0;
  std::optional<double> h_initial_kg;  // defaults to a full tank

  Tariff tariff;

  // forecaster
  int hidden_units = 5;
  int stack_layers = 4;
  int tau = 96;
  int window_stride = 0;  // 0 means tau (non-overlapping windows)
  double learning_rate = 0.01;
  int max_iterations = 1000;
  int patience = 30;
  double clip_norm = 5.0;
  std::uint64_t seed = 42;

  RnnDims rnn_dims() const { return RnnDims{1, hidden_units, stack_layers, 1}; }
  TrainConfig train_config() const {
    return TrainConfig{learning_rate, max_iterations, patience, clip_norm, seed};
  }
  PlantConfig plant() const {
    return PlantConfig::with_reserve_fraction(h_max_kg, h_min_fraction, 1.0 / kwh_per_kg,
                                              e_max_kwh);
  }
  int effective_stride() const { return window_stride > 0 ? window_stride : tau; }
  std::string artifact_path(const char* name) const;
};

// Parses a "key = value" config file. Unknown keys and malformed values are
// rejected with ConfigError.
PipelineConfig load_config(const std::string& path);

// Subcommands. Each returns a process exit code: 0 success, 2 configuration or
// precondition error, 1 runtime failure. Errors go to stderr.
int cmd_ingest(const PipelineConfig& cfg);
int cmd_fit(const PipelineConfig& cfg);
int cmd_demand(const PipelineConfig& cfg);
int cmd_train(const PipelineConfig& cfg);
int cmd_schedule(const PipelineConfig& cfg, bool perfect_forecast);
int cmd_report(const PipelineConfig& cfg);

}  // namespace h2sched
