#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "enrolcast/forecast.hpp"

namespace enrolcast {

struct ErrorSummary {
  std::string model;
  std::string regime;
  int step = 0;  // 0 when pooled over steps
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double smape = 0.0;
  double mape = 0.0;
  int n = 0;
  int mape_excluded = 0;  // zero actuals left out of MAPE
};

/// Throws Error on an empty set or a record without an actual. Model and
/// regime are taken from the first record.
ErrorSummary point_errors(std::span<const ForecastRecord> records);

double pinball(double tau, double q, double y);

/// (2/K) * sum of pinball losses over {(1-c)/2, 0.5, (1+c)/2}; a lone
/// median reduces to |y - median|.
double crps_from_quantiles(const std::map<double, double>& quantiles, double y,
                           double central_level);

/// Winkler interval score for the central interval [lower, upper].
double interval_score(double lower, double upper, double y, double central_level);

struct PitValue {
  double value = 0.0;
  bool clamped = false;
};

/// Predictive CDF at y by linear interpolation between quantile knots,
/// clamped to the outermost levels. A flat run of equal quantile values
/// maps to the middle of its level range.
PitValue pit(const std::map<double, double>& quantiles, double y);

struct PitEcdf {
  std::vector<std::pair<double, double>> steps;  // (u, ECDF(u)) at sorted values
  double max_deviation = 0.0;
};

PitEcdf pit_ecdf(std::span<const double> pit_values);

/// Two-sided 5% Kolmogorov critical value (Stephens' approximation).
double kolmogorov_band_5pct(std::size_t n);

struct ProbSummary {
  double crps80 = 0.0;
  double crps95 = 0.0;
  double interval_score_80 = 0.0;
  double interval_score_95 = 0.0;
  std::vector<double> pit_values;
  int pit_clamped = 0;
};

/// Needs levels 0.025, 0.1, 0.5, 0.9, 0.975 on every record.
ProbSummary prob_scores(std::span<const ForecastRecord> records);

/// reference - model; positive favours the model.
double delta_mae(double model_mae, double reference_mae);
double delta_mae(const ErrorSummary& model, const ErrorSummary& reference);

struct PairedDifference {
  Year origin = 0;
  int step = 1;
  double difference = 0.0;  // |reference error| - |model error|
};

struct PairedDelta {
  double delta = 0.0;
  std::vector<PairedDifference> per_key;
};

/// Paired version on records keyed by (origin, step). Throws Error on
/// mismatched keys.
PairedDelta delta_mae(std::span<const ForecastRecord> model,
                      std::span<const ForecastRecord> reference);

/// Average ranks of tied values (1-based).
std::vector<double> fractional_ranks(std::span<const double> values);

struct RankRow {
  std::string regime;
  std::string model;
  std::map<std::string, double> metric_ranks;  // averaged over steps
  double average_rank = 0.0;
  int final_rank = 0;
};

/// Per regime: fractional ranks on MAE, RMSE, SMAPE and MAPE within each
/// step, averaged across metrics and steps. Final order by average rank,
/// then MAE rank, then name. Rows come back grouped by regime in order.
std::vector<RankRow> rank_models(std::span<const ErrorSummary> summaries);

}  // namespace enrolcast
