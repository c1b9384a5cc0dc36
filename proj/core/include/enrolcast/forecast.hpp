#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "enrolcast/timebase.hpp"

namespace enrolcast {

struct YearValue {
  Year year = 0;
  double value = 0.0;
  friend bool operator==(const YearValue&, const YearValue&) = default;
};

/// Everything an adapter may see at one forecast origin.
struct ForecastRequest {
  std::string request_id;
  std::string series_id;
  std::vector<YearValue> target_history;
  std::map<std::string, std::vector<YearValue>> covariate_history;
  int horizon = 1;
  std::vector<double> quantile_levels;  // strictly increasing, in (0, 1)

  Year last_target_year() const;
  /// Throws Error when the invariants above do not hold.
  void require_valid() const;

  friend bool operator==(const ForecastRequest&, const ForecastRequest&) = default;
};

struct ForecastStep {
  double point = 0.0;
  std::map<double, double> quantiles;  // level -> value
  friend bool operator==(const ForecastStep&, const ForecastStep&) = default;
};

/// Universal forecaster output: one entry per horizon step.
struct QuantileForecast {
  std::vector<ForecastStep> steps;
  std::vector<std::string> flags;
  friend bool operator==(const QuantileForecast&, const QuantileForecast&) = default;
};

struct ForecastRecord {
  std::string model;
  std::string regime;
  Year origin = 0;
  int step = 1;
  Year target_year = 0;
  double point = 0.0;
  std::map<double, double> quantiles;
  std::optional<double> actual;
  std::vector<std::string> flags;

  friend bool operator==(const ForecastRecord&, const ForecastRecord&) = default;
};

}  // namespace enrolcast
