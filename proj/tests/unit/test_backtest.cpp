#include <gtest/gtest.h>

#include "enrolcast/backtest.hpp"
#include "enrolcast/error.hpp"
#include "fixtures.hpp"

using namespace enrolcast;
using enrolcast::testing::stub_descriptor;
using enrolcast::testing::synthetic_dataset;

namespace {

AdapterDescriptor in_process(const std::string& name, const std::string& model = {}) {
  AdapterDescriptor d;
  d.name = name;
  d.model = model;
  return d;
}

BacktestPlan plan_for(const Dataset& ds, std::vector<AdapterDescriptor> adapters,
                      std::vector<std::string> regimes = {"none", "google_trends"}) {
  BacktestPlan p;
  p.cohort = "domestic";
  p.origins = plan_origins(ds.target("domestic"), 8, 1);
  p.regimes = std::move(regimes);
  p.adapters = std::move(adapters);
  return p;
}

}  // namespace

TEST(Origins, NineteenYearsGiveEleven) {
  const auto ds = synthetic_dataset();
  const auto o = plan_origins(ds.target("domestic"), 8, 1);
  ASSERT_EQ(o.size(), 11u);
  EXPECT_EQ(o.front(), 2014);
  EXPECT_EQ(o.back(), 2024);
}

TEST(Origins, HorizonAndTrainingShiftGeometry) {
  std::vector<double> v(19, 1.0);
  const auto s = make_series("x", "", 2007, v);
  EXPECT_EQ(plan_origins(s, 8, 2).size(), 10u);
  EXPECT_EQ(plan_origins(s, 10, 1).size(), 9u);
  EXPECT_THROW(plan_origins(s, 19, 1), Error);
}

TEST(Origins, MissingActualSkipsOrigin) {
  std::vector<Observation> pts;
  for (Year y = 2007; y <= 2025; ++y) pts.push_back({y, y == 2020 ? std::nullopt : std::optional<double>(1.0), y});
  const auto o = plan_origins(AnnualSeries("x", "", pts), 8, 1);
  EXPECT_EQ(std::count(o.begin(), o.end(), 2019), 0);
  EXPECT_EQ(std::count(o.begin(), o.end(), 2020), 1);
  EXPECT_EQ(o.size(), 10u);
}

TEST(Assemble, WindowStopsAtOrigin) {
  const auto ds = synthetic_dataset();
  auto plan = plan_for(ds, {in_process("persistence")});
  for (Year origin : plan.origins) {
    const auto req = assemble_request(ds, plan, origin, "google_trends");
    EXPECT_EQ(req.target_history.back().year, origin);
    EXPECT_EQ(static_cast<int>(req.target_history.size()), origin - 2007 + 1);
    EXPECT_EQ(req.covariate_history.size(), 4u);
    for (const auto& [name, pts] : req.covariate_history)
      for (const auto& p : pts) EXPECT_LE(p.year, origin) << name;
    EXPECT_NO_THROW(verify_request(ds, plan, origin, "google_trends", req));
  }
}

TEST(Assemble, StandardizerUsesOnlyWindow) {
  const auto ds = synthetic_dataset();
  auto plan = plan_for(ds, {in_process("persistence")}, {"ioci"});
  const auto req = assemble_request(ds, plan, 2014, "ioci");
  const auto& z = req.covariate_history.at("ioci");
  ASSERT_EQ(z.size(), 8u);
  double mean = 0;
  for (const auto& p : z) mean += p.value;
  EXPECT_NEAR(mean / 8, 0.0, 1e-12);
}

TEST(Assemble, CovariatesOmittedWhenUnconditioned) {
  const auto ds = synthetic_dataset();
  auto plan = plan_for(ds, {in_process("persistence")});
  EXPECT_TRUE(assemble_request(ds, plan, 2016, "google_trends", false).covariate_history.empty());
  EXPECT_TRUE(assemble_request(ds, plan, 2016, "none").covariate_history.empty());
}

TEST(Leakage, PlantedFutureVintageAlwaysDetected) {
  const auto base = synthetic_dataset();
  auto plan = plan_for(base, {in_process("persistence")});
  int planted = 0, detected = 0;
  for (Year origin : plan.origins) {
    for (const auto& regime : {"google_trends", "ioci"}) {
      auto ds = base;
      for (auto& r : ds.covariate_regimes) {
        if (r.regime_name != regime) continue;
        auto& spec = r.series.begin()->second;
        auto pts = spec.series.points();
        for (auto& p : pts)
          if (p.year == origin - spec.lag_years) p.vintage = origin + 1;
        spec.series = spec.series.with_points(pts);
      }
      ++planted;
      try {
        assemble_request(ds, plan, origin, regime);
      } catch (const LeakageError& e) {
        if (std::string(e.what()).find("leakage detected") != std::string::npos) ++detected;
      }
    }
  }
  EXPECT_EQ(planted, 22);
  EXPECT_EQ(detected, planted);
}

TEST(Leakage, VerifyRejectsTamperedRequest) {
  const auto ds = synthetic_dataset();
  auto plan = plan_for(ds, {in_process("persistence")});
  auto req = assemble_request(ds, plan, 2015, "none");
  req.target_history.push_back({2016, 1.0});
  EXPECT_THROW(verify_request(ds, plan, 2015, "none", req), LeakageError);
  req = assemble_request(ds, plan, 2015, "none");
  req.covariate_history["smuggled"] = {{2015, 0.0}};
  EXPECT_THROW(verify_request(ds, plan, 2015, "none", req), LeakageError);
}

TEST(Leakage, RunAbortsOnLeak) {
  auto ds = synthetic_dataset();
  auto& spec = ds.covariate_regimes[0].series.begin()->second;
  auto pts = spec.series.points();
  pts[10].vintage = 2030;
  spec.series = spec.series.with_points(pts);
  AdapterDescriptor a = in_process("arima-x", "arima");
  a.supports_covariates = true;
  EXPECT_THROW(run_backtest(plan_for(ds, {a}), ds), LeakageError);
}

TEST(Run, GridIsComplete) {
  const auto ds = synthetic_dataset();
  const auto plan = plan_for(ds, {in_process("persistence"), in_process("arima")});
  const auto rep = run_backtest(plan, ds);
  EXPECT_EQ(rep.records.size(), 44u);
  EXPECT_TRUE(rep.failures.empty());
  for (const auto& r : rep.records) {
    ASSERT_TRUE(r.actual);
    EXPECT_EQ(*r.actual, *ds.target("domestic").value_at(r.target_year));
    EXPECT_EQ(r.quantiles.size(), 5u);
  }
}

TEST(Run, OneTimeoutCostsOneCell) {
  const auto ds = synthetic_dataset();
  const auto plan =
      plan_for(ds, {in_process("persistence"), stub_descriptor("flaky", "--mode hang --after 21", 1)});
  const auto rep = run_backtest(plan, ds);
  EXPECT_EQ(rep.records.size(), 43u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].kind, "timeout");
  EXPECT_EQ(rep.failures[0].model, "flaky");
  EXPECT_EQ(rep.failures[0].regime, "google_trends");
  EXPECT_EQ(rep.failures[0].origin, 2024);
}

TEST(Run, ProtocolFailureKeepsRawPayload) {
  const auto ds = synthetic_dataset();
  const auto plan = plan_for(ds, {stub_descriptor("junk", "--mode garbage --after 3")}, {"none"});
  const auto rep = run_backtest(plan, ds);
  // Each garbage reply resets the session; the fresh process serves three more.
  EXPECT_EQ(rep.records.size(), 9u);
  ASSERT_EQ(rep.failures.size(), 2u);
  for (const auto& f : rep.failures) {
    EXPECT_EQ(f.kind, "protocol");
    EXPECT_EQ(f.raw_payload, "{\"this is\": not json");
  }
}

TEST(Run, AllFailedIsEmptyReport) {
  const auto ds = synthetic_dataset();
  const auto plan = plan_for(ds, {stub_descriptor("dead", "--mode crash")}, {"none"});
  try {
    run_backtest(plan, ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "empty report");
  }
}

TEST(Run, PersistenceIsRegimeInvariant) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto ds = synthetic_dataset(seed);
    const auto plan = plan_for(ds, {in_process("persistence")}, {"none", "google_trends", "ioci"});
    const auto rep = run_backtest(plan, ds);
    ASSERT_EQ(rep.records.size(), 33u);
    for (std::size_t i = 0; i < 11; ++i)
      for (std::size_t r = 1; r < 3; ++r) {
        auto a = rep.records[i];
        auto b = rep.records[r * 11 + i];
        EXPECT_NE(a.regime, b.regime);
        b.regime = a.regime;
        EXPECT_EQ(a, b);
      }
  }
}

TEST(Run, CovariateRegimesReachConditionedAdapters) {
  const auto ds = synthetic_dataset();
  auto echo = stub_descriptor("echo", "--mode echo");
  echo.supports_covariates = true;
  const auto rep = run_backtest(plan_for(ds, {echo}, {"none", "ioci"}), ds);
  for (const auto& r : rep.records) {
    const std::string want = r.regime == "none"
                                 ? "covariates="
                                 : "covariates=ioci:" + std::to_string(r.origin - 2007 + 1);
    EXPECT_EQ(r.flags.back(), want);
  }
}

TEST(Run, Deterministic) {
  const auto ds = synthetic_dataset();
  AdapterDescriptor ax = in_process("arima-x", "arima");
  ax.supports_covariates = true;
  const auto plan = plan_for(ds, {in_process("persistence"), in_process("arima"), ax});
  EXPECT_EQ(run_backtest(plan, ds), run_backtest(plan, ds));
}

TEST(Run, PostHorizonDataDoesNotMatter) {
  const auto ds = synthetic_dataset();
  const auto plan = plan_for(ds, {in_process("persistence"), in_process("arima")});
  auto cut = ds;
  auto& t = cut.targets.at("domestic");
  std::vector<Observation> pts;
  for (const auto& p : t.points())
    if (p.year <= 2025) pts.push_back(p);
  pts.push_back({2026, 1e9, 2026});
  t = t.with_points(pts);
  EXPECT_EQ(run_backtest(plan, ds), run_backtest(plan, cut));
}

TEST(Plan, Validation) {
  const auto ds = synthetic_dataset();
  auto plan = plan_for(ds, {in_process("a", "persistence"), in_process("a", "persistence")});
  EXPECT_THROW(plan.require_valid(), Error);
  plan = plan_for(ds, {in_process("persistence")}, {"nonexistent"});
  EXPECT_THROW(run_backtest(plan, ds), Error);
  plan = plan_for(ds, {in_process("persistence")});
  plan.origins = {2010};
  EXPECT_THROW(run_backtest(plan, ds), Error);
}
