#pragma once

#include <span>
#include <vector>

#include "enrolcast/forecast.hpp"

namespace enrolcast {

/// Carries the last observed value forward over every step. Requested
/// quantiles collapse onto the point (degenerate predictive distribution).
QuantileForecast persistence_forecast(std::span<const double> history, int horizon,
                                      std::span<const double> levels = {});
QuantileForecast persistence_forecast(const AnnualSeries& history, int horizon,
                                      std::span<const double> levels = {});

/// d-th order differences; length n - d.
std::vector<double> difference(std::span<const double> series, int d);

/// Inverse of `difference`. `anchors` are the d values immediately
/// preceding the first differenced value, oldest first.
std::vector<double> undifference(std::span<const double> diffs,
                                 std::span<const double> anchors, int d);

}  // namespace enrolcast
