#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "enrolcast/adapters.hpp"
#include "enrolcast/timebase.hpp"

namespace enrolcast::cli {

/// Usage or I/O failure; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string dataset;  // manifest path
  std::vector<std::string> cohorts;
  std::vector<std::string> regimes;  // empty: "none" plus every dataset regime
  std::vector<Year> origins;         // empty: derived from the target series
  int min_train_years = 8;
  int horizon = 1;
  std::vector<double> quantile_levels{0.025, 0.1, 0.5, 0.9, 0.975};
  std::vector<AdapterDescriptor> adapters;
  std::string reference_model = "persistence";
  std::string out = "out";
  std::uint64_t seed = 0;
};

/// JSON config. Relative dataset paths resolve against `base_dir`.
///
/// {"dataset": "data/manifest.json", "cohorts": ["domestic"],
///  "regimes": ["none", "google_trends"], "min_train_years": 8,
///  "horizon": 1, "quantile_levels": [0.025, 0.1, 0.5, 0.9, 0.975],
///  "adapters": [{"name": "persistence"},
///               {"name": "arimax", "model": "arima",
///                "supports_covariates": true},
///               {"name": "bolt", "transport": "child_process",
///                "command": "python -m bridge --family chronos-bolt",
///                "timeout_seconds": 120, "residual_covariates": true}],
///  "reference_model": "persistence", "seed": 7, "out": "out"}
RunConfig parse_run_config(std::string_view text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

AdapterDescriptor parse_adapter_descriptor(std::string_view json_text);

/// Canonical JSON of the resolved config (stable key order, no output dir).
std::string config_json(const RunConfig& c);

std::string read_input_file(const std::string& path);

}  // namespace enrolcast::cli
