#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "enrolcast/error.hpp"
#include "enrolcast/features.hpp"

using namespace enrolcast;

namespace {

AnnualSeries series(std::vector<double> v, Year first = 2007) {
  return make_series("x", "", first, v);
}

std::vector<double> values(const AnnualSeries& s) { return s.observed_values(); }

MonthlySeries constant_monthly(double v, Year first, int years) {
  MonthlySeries m;
  m.id = "rsv";
  for (Year y = first; y < first + years; ++y)
    for (int mo = 1; mo <= 12; ++mo) m.points.push_back({y, mo, v});
  return m;
}

}  // namespace

TEST(EwmaSpec, AlphaFromSpan) {
  EXPECT_DOUBLE_EQ(EwmaSpec(2).alpha(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(EwmaSpec(3).alpha(), 0.5);
  EXPECT_THROW(EwmaSpec(0), Error);
}

TEST(Ewma, HandRecursionSpan2) {
  EXPECT_EQ(values(ewma(series({3, 6}), EwmaSpec(2))), (std::vector<double>{3, 5}));
}

TEST(Ewma, HandRecursionSpan3) {
  EXPECT_EQ(values(ewma(series({4, 8, 6}), EwmaSpec(3))), (std::vector<double>{4, 6, 6}));
}

TEST(Ewma, ConstantIsFixedPoint) {
  const auto out = values(ewma(series({7.25, 7.25, 7.25, 7.25}), EwmaSpec(4)));
  for (double v : out) EXPECT_EQ(v, 7.25);
}

TEST(Ewma, InteriorGapIsError) {
  std::vector<Observation> pts{{2007, 1.0, 2007}, {2008, std::nullopt, 2008}, {2009, 3.0, 2009}};
  try {
    ewma(AnnualSeries("x", "", pts), EwmaSpec(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("gap in EWMA"), std::string::npos);
  }
}

TEST(Ewma, VintageIsRunningMax) {
  std::vector<Observation> pts{{2007, 1.0, 2009}, {2008, 2.0, 2008}, {2009, 3.0, 2011}};
  const auto out = ewma(AnnualSeries("x", "", pts), EwmaSpec(2));
  EXPECT_EQ(out.points()[0].vintage, 2009);
  EXPECT_EQ(out.points()[1].vintage, 2009);
  EXPECT_EQ(out.points()[2].vintage, 2011);
}

TEST(Ewma, ConvexCombinationProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(12);
    for (auto& v : x) v = u(rng);
    const auto m = values(ewma(series(x), EwmaSpec(1 + trial % 5)));
    for (std::size_t t = 0; t < x.size(); ++t) {
      const auto [lo, hi] = std::minmax_element(x.begin(), x.begin() + t + 1);
      EXPECT_GE(m[t], *lo - 1e-12);
      EXPECT_LE(m[t], *hi + 1e-12);
    }
  }
}

TEST(Lag, ShiftsByK) {
  const auto out = lag(series({1, 2, 3}), 1);
  EXPECT_EQ(out.first_year(), 2008);
  EXPECT_EQ(values(out), (std::vector<double>{1, 2}));
}

TEST(Lag, ComposesAdditively) {
  const auto s = series({1, 2, 3, 4, 5, 6});
  const auto twice = lag(lag(s, 1), 1);
  const auto direct = lag(s, 2);
  EXPECT_EQ(twice.points(), direct.points());
}

TEST(Lag, ExceedingHistoryIsError) {
  EXPECT_THROW(lag(series({1, 2}), 2), Error);
}

TEST(Lag, LaggedValueAtOriginPassesGuard) {
  const auto l = lag(series({1, 2, 3, 4, 5}), 1);
  const auto w = slice_training_window(l, 2010);
  EXPECT_EQ(*w.value_at(2010), 3.0);
  for (const auto& p : w.points()) EXPECT_LE(p.vintage, 2010);
}

TEST(Standardizer, HandArithmetic) {
  const auto p = fit_standardizer(series({2, 4, 6}), 2009);
  EXPECT_EQ(p.mean, 4.0);
  EXPECT_EQ(p.std, 2.0);
  EXPECT_EQ(p.window_end, 2009);
  EXPECT_FALSE(p.degenerate);
}

TEST(Standardizer, SinglePointIsError) {
  EXPECT_THROW(fit_standardizer(series({2, 4, 6}), 2007), Error);
}

TEST(Standardizer, ConstantWindowIsDegenerate) {
  const auto p = fit_standardizer(series({5, 5, 5}), 2009);
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.std, 0.0);
  const auto z = apply_standardizer(series({5, 9, 1}), p);
  EXPECT_TRUE(z.degenerate);
  for (double v : values(z.series)) EXPECT_EQ(v, 0.0);
}

TEST(Standardizer, ApplyHandArithmetic) {
  StandardizationParams p{4.0, 2.0, 2009, false};
  const auto z = apply_standardizer(series({6, 4}), p);
  EXPECT_EQ(values(z.series), (std::vector<double>{1.0, 0.0}));
}

TEST(Standardizer, ZeroMeanUnitStdOnWindow) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(10, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(10);
    for (auto& v : x) v = n(rng);
    const auto s = series(x);
    const auto z = values(apply_standardizer(s, fit_standardizer(s, 2016)).series);
    double mean = 0, ss = 0;
    for (double v : z) mean += v;
    mean /= z.size();
    for (double v : z) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(ss / (z.size() - 1)), 1.0, 1e-9);
  }
}

TEST(Standardizer, FitIgnoresNextYear) {
  auto a = series({1, 2, 3, 4});
  auto pts = a.points();
  pts[3].value = 1e6;
  const auto b = a.with_points(pts);
  const auto pa = fit_standardizer(a, 2009), pb = fit_standardizer(b, 2009);
  EXPECT_EQ(pa.mean, pb.mean);
  EXPECT_EQ(pa.std, pb.std);
}

TEST(Standardizer, LateVintageExcludedFromFit) {
  std::vector<Observation> pts{{2007, 2.0, 2007}, {2008, 4.0, 2008}, {2009, 6.0, 2009},
                               {2010, 100.0, 2012}};
  const auto p = fit_standardizer(AnnualSeries("x", "", pts), 2011);
  EXPECT_EQ(p.mean, 4.0);
}

TEST(Aggregate, ConstantYear) {
  const auto a = aggregate_monthly_to_annual(constant_monthly(50, 2010, 1), 10);
  EXPECT_EQ(*a.value_at(2010), 50.0);
  EXPECT_EQ(a.find(2010)->vintage, 2010);
}

TEST(Aggregate, MeanOfAvailableMonths) {
  MonthlySeries m;
  m.id = "rsv";
  m.points = {{2010, 1, 0.0}, {2010, 7, 100.0}};
  EXPECT_EQ(*aggregate_monthly_to_annual(m, 2).value_at(2010), 50.0);
}

TEST(Aggregate, TooFewMonthsIsMissing) {
  MonthlySeries m;
  m.id = "rsv";
  for (int mo = 1; mo <= 6; ++mo) m.points.push_back({2010, mo, 40.0});
  const auto a = aggregate_monthly_to_annual(m, 10);
  ASSERT_NE(a.find(2010), nullptr);
  EXPECT_TRUE(a.find(2010)->missing());
}

TEST(Monthly, RejectsOutOfRangeAndDuplicates) {
  MonthlySeries m;
  m.id = "rsv";
  m.points = {{2010, 1, 101.0}};
  EXPECT_THROW(m.require_valid(), Error);
  m.points = {{2010, 13, 1.0}};
  EXPECT_THROW(m.require_valid(), Error);
  m.points = {{2010, 1, 1.0}, {2010, 1, 2.0}};
  EXPECT_THROW(m.require_valid(), Error);
}

TEST(TrendsFeatures, ConstantInputGivesConstantFeatures) {
  const auto f = build_trends_features(constant_monthly(50, 2010, 3));
  ASSERT_EQ(f.regime.series.size(), 4u);
  for (const auto& [name, spec] : f.regime.series)
    for (double v : values(spec.series)) EXPECT_EQ(v, 50.0) << name;
  EXPECT_EQ(f.regime.series.at("rsv_lag1").series.first_year(), 2011);
  EXPECT_TRUE(f.findings.empty());
}

TEST(TrendsFeatures, Ewma2OfAggregate) {
  MonthlySeries m = constant_monthly(3, 2010, 1);
  for (int mo = 1; mo <= 12; ++mo) m.points.push_back({2011, mo, 6.0});
  const auto f = build_trends_features(m);
  EXPECT_EQ(values(f.regime.series.at("rsv_ewma2").series), (std::vector<double>{3, 5}));
}

TEST(TrendsFeatures, OneYearOmitsLagWithFinding) {
  const auto f = build_trends_features(constant_monthly(50, 2010, 1));
  EXPECT_EQ(f.regime.series.size(), 3u);
  EXPECT_EQ(f.regime.series.count("rsv_lag1"), 0u);
  ASSERT_EQ(f.findings.size(), 1u);
  EXPECT_EQ(f.findings[0].code, "feature omitted");
}
