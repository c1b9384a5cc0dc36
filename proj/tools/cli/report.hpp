#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "csv.hpp"
#include "enrolcast/backtest.hpp"
#include "enrolcast/forecast.hpp"

namespace enrolcast::cli {

struct CohortRecord {
  std::string cohort;
  ForecastRecord record;
};

std::string records_csv(const std::vector<BacktestReport>& reports, const std::string& hash);
std::vector<CohortRecord> parse_records(const CsvTable& table);

std::string failures_csv(const std::vector<BacktestReport>& reports, const std::string& hash);

/// File name -> content. Cohort and regime names are made file-safe.
using ReportFiles = std::map<std::string, std::string>;

std::string file_safe(std::string_view name);

/// metrics_<cohort>_<regime>.csv (MAE, RMSE, SMAPE, MAPE, rank),
/// effect_sizes.csv (delta MAE against the reference model, CRPS 80%,
/// CRPS 95%, interval scores), pit.csv and summary.json.
ReportFiles build_metric_reports(const std::vector<CohortRecord>& records,
                                 const std::string& reference_model, const std::string& hash,
                                 const std::map<std::string, int>& failure_counts = {});

struct RankReport {
  ReportFiles files;  // rank_<cohort>_<regime>.csv
  std::string text;   // human-readable tables
};

/// Ranks from previously written metrics tables.
RankReport build_rank_reports(const std::vector<CsvTable>& metrics_tables,
                              const std::string& hash);

}  // namespace enrolcast::cli
