#include "enrolcast/baselines.hpp"

#include <algorithm>

#include "enrolcast/error.hpp"

namespace enrolcast {

QuantileForecast persistence_forecast(std::span<const double> history, int horizon,
                                      std::span<const double> levels) {
  if (history.empty()) throw Error("persistence: empty history");
  if (horizon < 1) throw Error("horizon must be >= 1");
  const double last = history.back();
  QuantileForecast out;
  out.steps.resize(static_cast<std::size_t>(horizon));
  for (auto& step : out.steps) {
    step.point = last;
    for (double level : levels) step.quantiles[level] = last;
  }
  return out;
}

QuantileForecast persistence_forecast(const AnnualSeries& history, int horizon,
                                      std::span<const double> levels) {
  const auto values = history.observed_values();
  return persistence_forecast(std::span<const double>(values), horizon, levels);
}

namespace {

// Signed binomial weights of (1 - B)^d: w_j = (-1)^j C(d, j).
std::vector<double> difference_weights(int d) {
  std::vector<double> w(static_cast<std::size_t>(d) + 1, 0.0);
  w[0] = 1.0;
  for (int k = 0; k < d; ++k)
    for (int j = k + 1; j >= 1; --j) w[j] -= w[j - 1];
  return w;
}

}  // namespace

std::vector<double> difference(std::span<const double> series, int d) {
  if (d < 0) throw Error("difference order must be >= 0");
  if (static_cast<std::size_t>(d) >= series.size() && d > 0)
    throw Error("difference order exceeds series length");
  std::vector<double> cur(series.begin(), series.end());
  for (int k = 0; k < d; ++k) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t i = 1; i < cur.size(); ++i) next[i - 1] = cur[i] - cur[i - 1];
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> undifference(std::span<const double> diffs,
                                 std::span<const double> anchors, int d) {
  if (d < 0) throw Error("difference order must be >= 0");
  if (anchors.size() != static_cast<std::size_t>(d))
    throw Error("undifference needs exactly d anchors");
  const auto w = difference_weights(d);
  std::vector<double> level(anchors.begin(), anchors.end());
  std::vector<double> out;
  out.reserve(diffs.size());
  for (double dv : diffs) {
    // x_t = diff_t - sum_{j>=1} w_j x_{t-j}
    double x = dv;
    const std::size_t n = level.size();
    for (int j = 1; j <= d; ++j) x -= w[j] * level[n - j];
    level.push_back(x);
    out.push_back(x);
  }
  return out;
}

}  // namespace enrolcast
