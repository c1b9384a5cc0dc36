#pragma once

#include <string>
#include <vector>

#include "enrolcast/timebase.hpp"

namespace enrolcast {

/// Span-parameterised exponential smoothing: alpha = 2 / (span + 1).
class EwmaSpec {
 public:
  explicit EwmaSpec(int span_years);

  int span_years() const noexcept { return span_; }
  double alpha() const noexcept { return 2.0 / (span_ + 1); }

 private:
  int span_;
};

struct StandardizationParams {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  Year window_end = 0;
  bool degenerate = false;
};

struct MonthlyPoint {
  Year year = 0;
  int month = 1;
  double value = 0.0;
};

/// Relative search volume, 0-100 within its extraction window.
struct MonthlySeries {
  std::string id;
  std::vector<MonthlyPoint> points;

  /// Throws Error on months outside 1..12, values outside [0, 100] or a
  /// repeated (year, month).
  void require_valid() const;
};

/// m_1 = x_1; m_t = alpha x_t + (1 - alpha) m_{t-1}. Leading and trailing
/// missing markers are dropped; an interior gap is an error. Output
/// vintage is the running maximum of input vintages.
AnnualSeries ewma(const AnnualSeries& series, const EwmaSpec& spec);

/// Value at year t is the input at t - k; the first k years are dropped.
AnnualSeries lag(const AnnualSeries& series, int k);

/// Fit on points with year and vintage <= window_end only.
StandardizationParams fit_standardizer(const AnnualSeries& series,
                                       Year window_end);

struct StandardizedSeries {
  AnnualSeries series;
  bool degenerate = false;
};

StandardizedSeries apply_standardizer(const AnnualSeries& series,
                                      const StandardizationParams& params);

/// Annual mean of the available months; years with fewer than
/// `min_months` months become missing markers. Vintage = year.
AnnualSeries aggregate_monthly_to_annual(const MonthlySeries& m,
                                         int min_months = 10);

struct TrendsFeatures {
  CovariateSet regime;
  std::vector<Finding> findings;
};

/// Annual level, EWMA(2), EWMA(3) and lag-1 of the annual aggregate.
TrendsFeatures build_trends_features(const MonthlySeries& raw,
                                     int min_months = 10);

}  // namespace enrolcast
