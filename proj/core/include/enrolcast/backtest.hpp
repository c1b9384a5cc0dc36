#pragma once

#include <map>
#include <string>
#include <vector>

#include "enrolcast/adapters.hpp"
#include "enrolcast/forecast.hpp"
#include "enrolcast/timebase.hpp"

namespace enrolcast {

inline const std::vector<double>& default_quantile_levels() {
  static const std::vector<double> levels{0.025, 0.1, 0.5, 0.9, 0.975};
  return levels;
}

struct BacktestPlan {
  std::string cohort;
  std::vector<Year> origins;
  int horizon = 1;
  std::vector<std::string> regimes;
  std::vector<AdapterDescriptor> adapters;
  int min_train_years = 8;
  std::vector<double> quantile_levels = default_quantile_levels();

  void require_valid() const;
};

/// Every year t with at least `min_train_years` observed points <= t and an
/// observed actual at t + horizon. Throws Error when the series is too
/// short or no origin qualifies.
std::vector<Year> plan_origins(const AnnualSeries& series, int min_train_years,
                               int horizon);

/// Target and covariate histories knowable at `origin`. Covariates are
/// lagged, checked against the vintage rule (LeakageError "leakage
/// detected" on any violation), cut to the window and, where configured,
/// standardized with parameters fitted at window_end = origin. With
/// `with_covariates` false the covariate map stays empty.
ForecastRequest assemble_request(const Dataset& ds, const BacktestPlan& plan, Year origin,
                                 const std::string& regime, bool with_covariates = true);

/// Re-checks an assembled request against the dataset: no year past the
/// origin and no source point with a vintage past it. Throws LeakageError.
void verify_request(const Dataset& ds, const BacktestPlan& plan, Year origin,
                    const std::string& regime, const ForecastRequest& req);

struct CellFailure {
  std::string model;
  std::string regime;
  Year origin = 0;
  std::string kind;  // timeout, protocol, quantiles, fit, error
  std::string message;
  std::string raw_payload;

  friend bool operator==(const CellFailure&, const CellFailure&) = default;
};

struct BacktestReport {
  std::string cohort;
  std::vector<ForecastRecord> records;  // sorted by model, regime, origin, step
  std::vector<CellFailure> failures;

  friend bool operator==(const BacktestReport&, const BacktestReport&) = default;
};

struct RunOptions {
  /// Extra environment for child-process adapters (e.g. the seed).
  std::map<std::string, std::string> adapter_env;
};

/// One worker per adapter; each adapter's cells run serially on its own
/// session. Cell failures are recorded; a leakage violation aborts the
/// run. Throws Error("empty report") when every cell failed.
BacktestReport run_backtest(const BacktestPlan& plan, const Dataset& ds,
                            const RunOptions& options = {});

}  // namespace enrolcast
