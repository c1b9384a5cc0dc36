#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enrolcast/features.hpp"
#include "enrolcast/timebase.hpp"

namespace enrolcast {

// Series files: comma-separated, header `series_id,year,value,vintage`
// with the vintage column optional. An empty value cell or `NA` is a
// missing marker. When the vintage column is absent every vintage is set
// to the observation year and the series is flagged.

std::vector<AnnualSeries> parse_series_csv(std::string_view text,
                                           const std::string& unit = "");
std::vector<AnnualSeries> read_series_csv(const std::string& path,
                                          const std::string& unit = "");
std::string format_series_csv(std::span<const AnnualSeries> series);

// Monthly search-intensity files: header `series_id,year,month,value`.
std::vector<MonthlySeries> parse_monthly_csv(std::string_view text);
std::vector<MonthlySeries> read_monthly_csv(const std::string& path);

/// Load a dataset manifest (JSON) and every series file it names. Paths
/// are resolved relative to the manifest's directory.
///
/// {
///   "targets": [{"cohort": "domestic", "file": "dom.csv",
///                "series_id": "domestic", "unit": "headcount"}],
///   "regimes": [{"name": "none", "series": []},
///               {"name": "ioci", "series": [{"name": "ioci",
///                 "file": "ioci.csv", "series_id": "ioci",
///                 "unit": "index 0-100", "lag_years": 0,
///                 "standardize": true}]}]
/// }
Dataset load_dataset(const std::string& manifest_path);

/// Write the manifest plus one series file per series into `directory`.
/// Returns the manifest path.
std::string save_dataset(const Dataset& ds, const std::string& directory);

}  // namespace enrolcast
