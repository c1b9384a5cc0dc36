#include "enrolcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "enrolcast/error.hpp"

namespace enrolcast {

EwmaSpec::EwmaSpec(int span_years) : span_(span_years) {
  if (span_years < 1) throw Error("EWMA span must be >= 1");
}

void MonthlySeries::require_valid() const {
  std::set<std::pair<Year, int>> seen;
  for (const auto& p : points) {
    if (p.month < 1 || p.month > 12)
      throw Error("monthly series '" + id + "': month out of range");
    if (!std::isfinite(p.value) || p.value < 0.0 || p.value > 100.0)
      throw Error("monthly series '" + id + "': value outside [0, 100]");
    if (!seen.emplace(p.year, p.month).second)
      throw Error("monthly series '" + id + "': duplicate month " +
                  std::to_string(p.year) + "-" + std::to_string(p.month));
  }
}

namespace {

// Observed points with leading/trailing missing markers removed. Throws if
// an interior point is missing or a year is skipped.
std::vector<Observation> contiguous_core(const AnnualSeries& series,
                                         const char* what) {
  series.require_well_formed();
  const auto& pts = series.points();
  auto first = std::find_if(pts.begin(), pts.end(),
                            [](const Observation& o) { return !o.missing(); });
  auto last = std::find_if(pts.rbegin(), pts.rend(),
                           [](const Observation& o) { return !o.missing(); });
  if (first == pts.end()) throw Error(std::string(what) + ": no observed values");
  std::vector<Observation> core(first, last.base());
  for (std::size_t i = 0; i < core.size(); ++i) {
    if (core[i].missing() || (i > 0 && core[i].year != core[i - 1].year + 1))
      throw Error(std::string("gap in ") + what + " input at " +
                  std::to_string(core[i].missing() ? core[i].year
                                                   : core[i - 1].year + 1));
  }
  return core;
}

}  // namespace

AnnualSeries ewma(const AnnualSeries& series, const EwmaSpec& spec) {
  const auto core = contiguous_core(series, "EWMA");
  // alpha x + (1 - alpha) m with alpha = 2/(s+1), kept as one rational
  // expression so integer inputs give exact results.
  const double s = spec.span_years();
  std::vector<Observation> out;
  out.reserve(core.size());
  double m = *core.front().value;
  Year vintage = core.front().vintage;
  for (std::size_t i = 0; i < core.size(); ++i) {
    const double x = *core[i].value;
    if (i > 0) m = (2.0 * x + (s - 1.0) * m) / (s + 1.0);
    vintage = std::max(vintage, core[i].vintage);
    out.push_back({core[i].year, m, vintage});
  }
  return AnnualSeries(series.id() + "_ewma" + std::to_string(spec.span_years()),
                      series.unit(), std::move(out), series.vintage_defaulted());
}

AnnualSeries lag(const AnnualSeries& series, int k) {
  if (k < 1) throw Error("lag must be >= 1");
  series.require_well_formed();
  const auto& pts = series.points();
  if (static_cast<std::size_t>(k) >= pts.size()) throw Error("lag exceeds history");
  std::vector<Observation> out;
  for (const auto& p : pts) {
    const Observation* src = series.find(p.year - k);
    if (p.year - k < pts.front().year) continue;
    if (src == nullptr)
      out.push_back({p.year, std::nullopt, p.year - k});
    else
      out.push_back({p.year, src->value, src->vintage});
  }
  return AnnualSeries(series.id() + "_lag" + std::to_string(k), series.unit(),
                      std::move(out), series.vintage_defaulted());
}

StandardizationParams fit_standardizer(const AnnualSeries& series,
                                       Year window_end) {
  std::vector<double> xs;
  for (const auto& p : series.points()) {
    if (p.year > window_end || p.vintage > window_end || !p.value) continue;
    if (!std::isfinite(*p.value))
      throw Error("non-finite value in standardisation window");
    xs.push_back(*p.value);
  }
  if (xs.size() < 2)
    throw Error("standardisation window for '" + series.id() +
                "' needs at least 2 points");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  StandardizationParams p;
  p.mean = mean;
  p.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  p.window_end = window_end;
  p.degenerate = p.std < 1e-12;
  if (p.degenerate) p.std = 0.0;
  return p;
}

StandardizedSeries apply_standardizer(const AnnualSeries& series,
                                      const StandardizationParams& params) {
  if (!params.degenerate && !(params.std > 0.0))
    throw Error("invalid standardisation parameters");
  std::vector<Observation> out;
  out.reserve(series.size());
  for (const auto& p : series.points()) {
    Observation o = p;
    if (p.value)
      o.value = params.degenerate ? 0.0 : (*p.value - params.mean) / params.std;
    out.push_back(o);
  }
  return {AnnualSeries(series.id(), "z-score", std::move(out),
                       series.vintage_defaulted()),
          params.degenerate};
}

AnnualSeries aggregate_monthly_to_annual(const MonthlySeries& m, int min_months) {
  if (min_months < 1 || min_months > 12)
    throw Error("min_months must be in 1..12");
  m.require_valid();
  std::map<Year, std::pair<double, int>> acc;
  for (const auto& p : m.points) {
    auto& [sum, count] = acc[p.year];
    sum += p.value;
    ++count;
  }
  std::vector<Observation> out;
  if (!acc.empty()) {
    for (Year y = acc.begin()->first; y <= acc.rbegin()->first; ++y) {
      auto it = acc.find(y);
      if (it == acc.end() || it->second.second < min_months)
        out.push_back({y, std::nullopt, y});
      else
        out.push_back({y, it->second.first / it->second.second, y});
    }
  }
  return AnnualSeries(m.id, "index 0-100", std::move(out));
}

TrendsFeatures build_trends_features(const MonthlySeries& raw, int min_months) {
  TrendsFeatures out;
  out.regime.regime_name = "google_trends";
  const AnnualSeries annual = aggregate_monthly_to_annual(raw, min_months);
  const auto core = contiguous_core(annual, "trends aggregate");
  const AnnualSeries level = annual.with_points(core);

  auto add = [&out](const std::string& name, AnnualSeries s) {
    out.regime.series.emplace(
        name, CovariateSpec{AnnualSeries(name, s.unit(), s.points()), 0, true});
  };
  add(raw.id + "_level", level);
  add(raw.id + "_ewma2", ewma(level, EwmaSpec(2)));
  add(raw.id + "_ewma3", ewma(level, EwmaSpec(3)));
  try {
    add(raw.id + "_lag1", lag(level, 1));
  } catch (const Error& e) {
    out.findings.push_back({Severity::warning, "feature omitted", raw.id + "_lag1",
                            std::nullopt, e.what()});
  }
  return out;
}

}  // namespace enrolcast
