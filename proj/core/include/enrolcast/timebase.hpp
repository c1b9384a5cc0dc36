#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace enrolcast {

/// Calendar year. All series in the engine are annual with step 1.
using Year = int;

/// One dated point. An empty value is an explicit missing marker; the
/// vintage is the year by which the value was knowable.
struct Observation {
  Year year = 0;
  std::optional<double> value;
  Year vintage = 0;

  bool missing() const noexcept { return !value.has_value(); }
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Year-indexed real-valued series with a vintage stamp per point.
///
/// Points are kept in ascending year order. Construction does not reject
/// duplicates, gaps or non-finite values so that validation can report
/// them; operations that need a clean series call `require_well_formed`.
class AnnualSeries {
 public:
  AnnualSeries() = default;
  AnnualSeries(std::string id, std::string unit, std::vector<Observation> points,
               bool vintage_defaulted = false);

  const std::string& id() const noexcept { return id_; }
  const std::string& unit() const noexcept { return unit_; }
  const std::vector<Observation>& points() const noexcept { return points_; }
  bool vintage_defaulted() const noexcept { return vintage_defaulted_; }

  bool empty() const noexcept { return points_.empty(); }
  std::size_t size() const noexcept { return points_.size(); }
  Year first_year() const;
  Year last_year() const;

  /// Value at `year`, if a non-missing point exists.
  std::optional<double> value_at(Year year) const;
  const Observation* find(Year year) const;

  /// Years with a non-missing value, in order.
  std::vector<Year> observed_years() const;
  /// Non-missing values, in year order.
  std::vector<double> observed_values() const;

  /// Throws Error on duplicate or unordered years, non-finite values,
  /// or an empty series.
  void require_well_formed() const;

  AnnualSeries with_points(std::vector<Observation> points) const;

  friend bool operator==(const AnnualSeries&, const AnnualSeries&) = default;

 private:
  std::string id_;
  std::string unit_;
  std::vector<Observation> points_;
  bool vintage_defaulted_ = false;
};

/// Build a series whose vintages equal the observation year.
AnnualSeries make_series(std::string id, std::string unit, Year first_year,
                         std::span<const double> values);

struct Cohort {
  std::string name;

  explicit Cohort(std::string label);
  static Cohort domestic() { return Cohort("domestic"); }
  static Cohort international() { return Cohort("international"); }

  friend auto operator<=>(const Cohort&, const Cohort&) = default;
};

/// One covariate in a regime together with its availability rule.
struct CovariateSpec {
  AnnualSeries series;
  int lag_years = 0;
  bool standardize = true;

  friend bool operator==(const CovariateSpec&, const CovariateSpec&) = default;
};

/// Named set of exogenous series forming one arm of the ablation grid.
struct CovariateSet {
  std::string regime_name;
  std::map<std::string, CovariateSpec> series;

  void require_valid() const;
  friend bool operator==(const CovariateSet&, const CovariateSet&) = default;
};

struct Dataset {
  std::map<std::string, AnnualSeries> targets;  // keyed by cohort name
  std::vector<CovariateSet> covariate_regimes;

  const AnnualSeries& target(const std::string& cohort) const;
  const CovariateSet& regime(const std::string& name) const;
  bool has_regime(const std::string& name) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct AlignedSeries {
  std::vector<Year> grid;
  std::vector<AnnualSeries> aligned;
};

/// Put every series on the contiguous union grid, inserting explicit
/// missing markers. No values are invented.
AlignedSeries align_to_common_grid(std::span<const AnnualSeries> series_list);

/// Points knowable at `origin`: year <= origin and vintage <= origin.
/// Throws Error("empty training window") if no observed value remains.
AnnualSeries slice_training_window(const AnnualSeries& series, Year origin);

enum class Severity { info, warning, error };

struct Finding {
  Severity severity = Severity::error;
  std::string code;  // e.g. "duplicate year"
  std::string series;
  std::optional<Year> year;
  std::string message;
};

std::string to_string(Severity s);
std::string format_finding(const Finding& f);

struct ValidationOptions {
  /// Absolute slack on range checks; series whose unit starts with
  /// "index" must lie in [0, 100] up to this tolerance.
  double tolerance = 0.0;
};

std::vector<Finding> check_series(const AnnualSeries& series,
                                  const ValidationOptions& options = {});
std::vector<Finding> validate_dataset(const Dataset& ds,
                                      const ValidationOptions& options = {});
bool has_errors(std::span<const Finding> findings);

}  // namespace enrolcast
