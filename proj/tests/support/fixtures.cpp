#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <unistd.h>

#include "enrolcast/features.hpp"
#include "enrolcast/series_io.hpp"

namespace enrolcast::testing {

namespace fs = std::filesystem;

std::string data_path(const std::string& name) {
  return std::string(ENROLCAST_TEST_DATA_DIR) + "/" + name;
}

std::string stub_adapter_path() { return ENROLCAST_STUB_ADAPTER; }

Dataset synthetic_dataset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const int first = 2007, n = 19;
  std::vector<double> dom, intl, ioci;
  double level_d = 4200.0, level_i = 1800.0;
  for (int i = 0; i < n; ++i) {
    level_d += 60.0 + 180.0 * noise(rng);
    level_i += (i == 13 ? -700.0 : 45.0) + 140.0 * noise(rng);
    dom.push_back(std::round(level_d));
    intl.push_back(std::round(std::max(200.0, level_i)));
  }
  const int calibrated[] = {15, 15, 15, 21, 7, 6, 7, 49, 51, 54, 39, 51, 58, 86, 95, 94, 75, 59, 39};
  for (int v : calibrated) ioci.push_back(v);

  MonthlySeries rsv;
  rsv.id = "rsv";
  for (int y = first; y < first + n; ++y)
    for (int m = 1; m <= 12; ++m)
      rsv.points.push_back({y, m, std::clamp(50.0 + 8.0 * std::sin(0.4 * (y - first)) +
                                                 6.0 * noise(rng),
                                             0.0, 100.0)});

  Dataset ds;
  ds.targets["domestic"] = make_series("domestic", "headcount", first, dom);
  ds.targets["international"] = make_series("international", "headcount", first, intl);

  auto trends = build_trends_features(rsv).regime;
  trends.regime_name = "google_trends";
  ds.covariate_regimes.push_back(trends);

  CovariateSet ioci_set;
  ioci_set.regime_name = "ioci";
  ioci_set.series["ioci"] = {make_series("ioci", "index 0-100", first, ioci), 0, true};
  ds.covariate_regimes.push_back(ioci_set);
  return ds;
}

std::string write_synthetic_dataset(const std::string& dir, std::uint64_t seed) {
  return save_dataset(synthetic_dataset(seed), dir);
}

AdapterDescriptor stub_descriptor(const std::string& name, const std::string& args,
                                  int timeout_seconds) {
  AdapterDescriptor d;
  d.name = name;
  d.transport = Transport::child_process;
  d.command = stub_adapter_path() + " --name " + name + " " + args;
  d.timeout_seconds = timeout_seconds;
  return d;
}

std::string scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("enrolcast-" + tag + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace enrolcast::testing
