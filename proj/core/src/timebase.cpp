#include "enrolcast/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "enrolcast/error.hpp"

namespace enrolcast {

AnnualSeries::AnnualSeries(std::string id, std::string unit,
                           std::vector<Observation> points,
                           bool vintage_defaulted)
    : id_(std::move(id)),
      unit_(std::move(unit)),
      points_(std::move(points)),
      vintage_defaulted_(vintage_defaulted) {
  std::stable_sort(points_.begin(), points_.end(),
                   [](const Observation& a, const Observation& b) {
                     return a.year < b.year;
                   });
}

Year AnnualSeries::first_year() const {
  if (points_.empty()) throw Error("series '" + id_ + "' is empty");
  return points_.front().year;
}

Year AnnualSeries::last_year() const {
  if (points_.empty()) throw Error("series '" + id_ + "' is empty");
  return points_.back().year;
}

const Observation* AnnualSeries::find(Year year) const {
  auto it = std::lower_bound(
      points_.begin(), points_.end(), year,
      [](const Observation& o, Year y) { return o.year < y; });
  if (it == points_.end() || it->year != year) return nullptr;
  return &*it;
}

std::optional<double> AnnualSeries::value_at(Year year) const {
  const Observation* o = find(year);
  if (o == nullptr) return std::nullopt;
  return o->value;
}

std::vector<Year> AnnualSeries::observed_years() const {
  std::vector<Year> out;
  for (const auto& p : points_)
    if (p.value) out.push_back(p.year);
  return out;
}

std::vector<double> AnnualSeries::observed_values() const {
  std::vector<double> out;
  for (const auto& p : points_)
    if (p.value) out.push_back(*p.value);
  return out;
}

void AnnualSeries::require_well_formed() const {
  if (points_.empty()) throw Error("series '" + id_ + "' is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (i > 0 && p.year <= points_[i - 1].year)
      throw Error("series '" + id_ + "': duplicate year " +
                  std::to_string(p.year));
    if (p.value && !std::isfinite(*p.value))
      throw Error("series '" + id_ + "': non-finite value at " +
                  std::to_string(p.year));
  }
}

AnnualSeries AnnualSeries::with_points(std::vector<Observation> points) const {
  return AnnualSeries(id_, unit_, std::move(points), vintage_defaulted_);
}

AnnualSeries make_series(std::string id, std::string unit, Year first_year,
                         std::span<const double> values) {
  std::vector<Observation> pts;
  pts.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Year y = first_year + static_cast<Year>(i);
    pts.push_back({y, values[i], y});
  }
  return AnnualSeries(std::move(id), std::move(unit), std::move(pts));
}

Cohort::Cohort(std::string label) : name(std::move(label)) {
  if (name.empty()) throw Error("cohort label must be non-empty");
}

void CovariateSet::require_valid() const {
  if (regime_name == "none" && !series.empty())
    throw Error("regime 'none' must not carry covariates");
  for (const auto& [name, spec] : series) {
    if (spec.lag_years < 0)
      throw Error("covariate '" + name + "': negative lag_years");
    spec.series.require_well_formed();
  }
}

const AnnualSeries& Dataset::target(const std::string& cohort) const {
  auto it = targets.find(cohort);
  if (it == targets.end()) throw Error("unknown cohort '" + cohort + "'");
  return it->second;
}

const CovariateSet& Dataset::regime(const std::string& name) const {
  for (const auto& r : covariate_regimes)
    if (r.regime_name == name) return r;
  throw Error("unknown covariate regime '" + name + "'");
}

bool Dataset::has_regime(const std::string& name) const {
  return std::any_of(covariate_regimes.begin(), covariate_regimes.end(),
                     [&](const CovariateSet& r) { return r.regime_name == name; });
}

AlignedSeries align_to_common_grid(std::span<const AnnualSeries> series_list) {
  if (series_list.empty()) throw Error("no series");
  Year lo = 0, hi = 0;
  bool any = false;
  for (const auto& s : series_list) {
    s.require_well_formed();
    if (!any) {
      lo = s.first_year();
      hi = s.last_year();
      any = true;
    } else {
      lo = std::min(lo, s.first_year());
      hi = std::max(hi, s.last_year());
    }
  }

  AlignedSeries out;
  for (Year y = lo; y <= hi; ++y) out.grid.push_back(y);
  for (const auto& s : series_list) {
    std::vector<Observation> pts;
    pts.reserve(out.grid.size());
    for (Year y : out.grid) {
      if (const Observation* o = s.find(y))
        pts.push_back(*o);
      else
        pts.push_back({y, std::nullopt, y});
    }
    out.aligned.push_back(s.with_points(std::move(pts)));
  }
  return out;
}

AnnualSeries slice_training_window(const AnnualSeries& series, Year origin) {
  std::vector<Observation> pts;
  bool any_value = false;
  for (const auto& p : series.points()) {
    if (p.year > origin || p.vintage > origin) continue;
    any_value = any_value || p.value.has_value();
    pts.push_back(p);
  }
  if (!any_value)
    throw Error("empty training window for '" + series.id() + "' at origin " +
                std::to_string(origin));
  return series.with_points(std::move(pts));
}

std::string to_string(Severity s) {
  switch (s) {
    case Severity::info:
      return "info";
    case Severity::warning:
      return "warning";
    case Severity::error:
      return "error";
  }
  return "error";
}

std::string format_finding(const Finding& f) {
  std::ostringstream os;
  os << to_string(f.severity) << ": " << f.code;
  if (!f.series.empty()) os << " [" << f.series << "]";
  if (f.year) os << " year " << *f.year;
  if (!f.message.empty()) os << ": " << f.message;
  return os.str();
}

std::vector<Finding> check_series(const AnnualSeries& series,
                                  const ValidationOptions& options) {
  std::vector<Finding> out;
  const auto& pts = series.points();
  const std::string& id = series.id();
  if (pts.empty()) {
    out.push_back({Severity::error, "empty series", id, std::nullopt,
                   "series has no points"});
    return out;
  }
  if (series.vintage_defaulted())
    out.push_back({Severity::info, "vintage defaulted", id, std::nullopt,
                   "no vintage column; vintage set to observation year"});

  const bool bounded = series.unit().rfind("index", 0) == 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (i > 0 && p.year == pts[i - 1].year) {
      out.push_back({Severity::error, "duplicate year", id, p.year, ""});
    } else if (i > 0 && p.year > pts[i - 1].year + 1) {
      out.push_back({Severity::warning, "grid gap", id, pts[i - 1].year + 1,
                     "years " + std::to_string(pts[i - 1].year + 1) + ".." +
                         std::to_string(p.year - 1) + " absent"});
    }
    if (p.value && !std::isfinite(*p.value))
      out.push_back({Severity::error, "non-finite value", id, p.year, ""});
    else if (p.value && bounded &&
             (*p.value < -options.tolerance || *p.value > 100.0 + options.tolerance))
      out.push_back({Severity::error, "out of range", id, p.year,
                     "index value outside [0, 100]"});
    if (!p.value && i > 0 && i + 1 < pts.size())
      out.push_back({Severity::warning, "grid gap", id, p.year,
                     "interior missing value"});
  }
  return out;
}

std::vector<Finding> validate_dataset(const Dataset& ds,
                                      const ValidationOptions& options) {
  std::vector<Finding> out;
  auto append = [&out](std::vector<Finding> f) {
    out.insert(out.end(), std::make_move_iterator(f.begin()),
               std::make_move_iterator(f.end()));
  };

  if (ds.targets.empty())
    out.push_back({Severity::error, "no targets", "", std::nullopt,
                   "dataset declares no target cohorts"});

  std::set<std::string> target_units;
  for (const auto& [cohort, s] : ds.targets) {
    append(check_series(s, options));
    target_units.insert(s.unit());
  }
  if (target_units.size() > 1) {
    std::string units;
    for (const auto& u : target_units) units += (units.empty() ? "" : ", ") + u;
    out.push_back({Severity::error, "unit mismatch", "targets", std::nullopt,
                   "target units differ: " + units});
  }

  std::set<std::string> regime_names;
  for (const auto& regime : ds.covariate_regimes) {
    if (!regime_names.insert(regime.regime_name).second)
      out.push_back({Severity::error, "duplicate regime", regime.regime_name,
                     std::nullopt, ""});
    if (regime.regime_name == "none" && !regime.series.empty())
      out.push_back({Severity::error, "regime none not empty", "none",
                     std::nullopt, "regime 'none' must have no covariates"});
    for (const auto& [name, spec] : regime.series) {
      append(check_series(spec.series, options));
      if (spec.lag_years < 0)
        out.push_back({Severity::error, "negative lag", name, std::nullopt, ""});
      for (const auto& p : spec.series.points()) {
        if (p.value && p.vintage > p.year + spec.lag_years)
          out.push_back({Severity::error, "leakage-prone vintage", name, p.year,
                         "vintage " + std::to_string(p.vintage) +
                             " exceeds year + lag_years (" +
                             std::to_string(p.year + spec.lag_years) + ")"});
      }
    }
  }

  return out;
}

bool has_errors(std::span<const Finding> findings) {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) {
    return f.severity == Severity::error;
  });
}

}  // namespace enrolcast
