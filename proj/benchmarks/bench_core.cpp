#include <benchmark/benchmark.h>

#include <random>

#include "enrolcast/arima.hpp"
#include "enrolcast/backtest.hpp"
#include "enrolcast/features.hpp"
#include "enrolcast/ioci.hpp"
#include "enrolcast/ioci_io.hpp"
#include "enrolcast/text_util.hpp"

using namespace enrolcast;

namespace {

std::vector<double> ar1(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0, 1);
  std::vector<double> y;
  double x = 0;
  for (int t = 0; t < n; ++t) y.push_back(x = 0.7 * x + z(rng));
  return y;
}

std::string data(const std::string& name) {
  return read_text_file(std::string(ENROLCAST_BENCH_DATA_DIR) + "/" + name);
}

Dataset walk_dataset() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 150);
  std::vector<double> dom, cov;
  double level = 5000;
  for (int i = 0; i < 19; ++i) {
    dom.push_back(level += 50 + z(rng));
    cov.push_back(z(rng));
  }
  Dataset ds;
  ds.targets["domestic"] = make_series("domestic", "headcount", 2007, dom);
  CovariateSet set;
  set.regime_name = "signal";
  set.series["signal"] = {make_series("signal", "", 2007, cov), 0, true};
  ds.covariate_regimes.push_back(set);
  return ds;
}

}  // namespace

static void BM_ArimaLoglik(benchmark::State& state) {
  const auto y = ar1(static_cast<int>(state.range(0)), 1);
  ArimaParams par;
  par.phi = {0.6};
  par.theta = {0.3};
  for (auto _ : state) benchmark::DoNotOptimize(arima_loglik(par, {1, 0, 1}, y));
}
BENCHMARK(BM_ArimaLoglik)->Arg(19)->Arg(200);

static void BM_ArimaFit(benchmark::State& state) {
  const auto y = ar1(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(arima_fit(y, {}, {1, 0, 1}));
}
BENCHMARK(BM_ArimaFit)->Arg(19)->Arg(200);

static void BM_ArimaSelect(benchmark::State& state) {
  const auto y = ar1(19, 4);
  const auto grid = default_order_grid();
  for (auto _ : state) benchmark::DoNotOptimize(arima_select(y, {}, grid));
}
BENCHMARK(BM_ArimaSelect);

static void BM_IociScoreSeries(benchmark::State& state) {
  const auto evidence = parse_evidence(data("evidence_pack.txt"));
  const auto reference = parse_reference(data("reference_calibrated.json"));
  const auto baselines = parse_baselines(data("baselines_uniform.json"));
  for (auto _ : state) benchmark::DoNotOptimize(score_series(evidence, reference, baselines));
}
BENCHMARK(BM_IociScoreSeries);

static void BM_Backtest(benchmark::State& state) {
  const auto ds = walk_dataset();
  BacktestPlan plan;
  plan.cohort = "domestic";
  plan.origins = plan_origins(ds.target("domestic"), 8, 1);
  plan.regimes = {"none", "signal"};
  AdapterDescriptor p, a;
  p.name = "persistence";
  a.name = "arima";
  plan.adapters = {p, a};
  for (auto _ : state) benchmark::DoNotOptimize(run_backtest(plan, ds));
}
BENCHMARK(BM_Backtest)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
