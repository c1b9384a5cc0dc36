#include <gtest/gtest.h>

#include <climits>
#include <functional>
#include <random>

#include "enrolcast/error.hpp"
#include "enrolcast/ioci.hpp"

using namespace enrolcast;

namespace {

DimensionScores uniform(int v) {
  DimensionScores d;
  d.fill(v);
  return d;
}

YearEvidence evidence(Year y, int items, bool thin = false,
                      std::optional<BandRange> band = std::nullopt) {
  YearEvidence e;
  e.year = y;
  for (int i = 0; i < items; ++i) e.ledger.push_back({LedgerKind::constraint, "note"});
  e.thin = thin;
  e.band = band;
  return e;
}

// Smallest L1 move from `base` (within boxes) that rounds to `target`,
// searched over every integer vector with L1 <= radius. INT_MAX if none.
int exhaustive_min_l1(const DimensionScores& base, int target, const BandConstraint& c,
                      const IociWeights& w, int radius) {
  int best = INT_MAX;
  DimensionScores d = base;
  std::function<void(int, int)> rec = [&](int i, int budget) {
    if (i == kDimensions) {
      if (rounding_of_bp(weighted_raw_bp(d, w)) == target)
        best = std::min(best, radius - budget);
      return;
    }
    for (int delta = -budget; delta <= budget; ++delta) {
      const int v = base[i] + delta;
      if (v < c.boxes[i].lo || v > c.boxes[i].hi) continue;
      d[i] = v;
      rec(i + 1, budget - std::abs(delta));
    }
    d[i] = base[i];
  };
  rec(0, radius);
  return best;
}

}  // namespace

TEST(RoundHalfUp, Definition) {
  EXPECT_EQ(round_half_up(2.5), 3);
  EXPECT_EQ(round_half_up(2.4), 2);
  EXPECT_EQ(round_half_up(0.0), 0);
  EXPECT_EQ(round_half_up(88.75), 89);
  EXPECT_EQ(round_half_up(51.5), 52);
  EXPECT_THROW(round_half_up(-0.1), Error);
}

TEST(Weights, DefaultsAndParsing) {
  const IociWeights w;
  EXPECT_EQ(w.weight(0), 0.30);
  EXPECT_EQ(w.weight(4), 0.10);
  EXPECT_EQ(IociWeights::from_decimal({0.30, 0.25, 0.20, 0.15, 0.10}), w);
  EXPECT_THROW(IociWeights::from_decimal({0.33333, 0.25, 0.20, 0.11667, 0.10}), Error);
  EXPECT_THROW(IociWeights::from_decimal({0.5, 0.5, 0.5, 0.0, 0.0}), Error);
  EXPECT_THROW(IociWeights::from_decimal({1.1, -0.1, 0.0, 0.0, 0.0}), Error);
}

TEST(Bands, LabelTable) {
  EXPECT_EQ(band_of("crisis-level"), (BandRange{81, 100, 81, 100}));
  EXPECT_EQ(band_of("Upper-moderate constraint"), (BandRange{41, 60, 51, 60}));
  EXPECT_EQ(band_of("exceptionally stable"), (BandRange{0, 20, 0, 20}));
  EXPECT_EQ(band_of("mild"), (BandRange{21, 40, 21, 40}));
  EXPECT_EQ(band_of("moderate"), (BandRange{41, 60, 41, 60}));
  EXPECT_EQ(band_of("high"), (BandRange{61, 80, 61, 80}));
  EXPECT_THROW(band_of("somewhat wobbly"), Error);
}

TEST(Bands, FoundInText) {
  EXPECT_EQ(find_band_in_text("Upper-moderate constraint (funding)"), NarrativeBand::upper_moderate);
  EXPECT_EQ(find_band_in_text("Crisis-level stress"), NarrativeBand::crisis);
  EXPECT_EQ(find_band_in_text("highlights of the year"), std::nullopt);
  EXPECT_EQ(find_band_in_text("nothing relevant"), std::nullopt);
}

TEST(Tags, ParseAndPrint) {
  for (auto t : {StressorTag::enrolment, StressorTag::covid_disruption, StressorTag::restructure,
                 StressorTag::funding, StressorTag::strategic})
    EXPECT_EQ(parse_stressor_tag(to_string(t)), t);
  EXPECT_THROW(parse_stressor_tag("weather"), Error);
}

TEST(Mode, ExplicitPairRule) {
  EXPECT_EQ(select_mode(ReferenceSeries{{2014, 48}}), IociMode::calibration);
  EXPECT_EQ(select_mode(std::nullopt), IociMode::strict);
  EXPECT_EQ(select_mode(ReferenceSeries{}), IociMode::strict);
}

TEST(Strict, WorkedExamples) {
  auto a = compute_strict(uniform(50), 0);
  EXPECT_EQ(a.raw, 50.0);
  EXPECT_EQ(a.final_ioci, 50);
  auto b = compute_strict({60, 50, 40, 30, 20}, 0);
  EXPECT_EQ(b.raw, 45.0);
  EXPECT_EQ(b.final_ioci, 45);
  auto c = compute_strict({90, 85, 95, 90, 80}, 0);
  EXPECT_EQ(c.raw, 88.75);
  EXPECT_EQ(c.final_ioci, 89);
  auto d = compute_strict({50, 50, 50, 60, 50}, 0);
  EXPECT_EQ(d.raw, 51.5);
  EXPECT_EQ(d.final_ioci, 52);
}

TEST(Strict, SanityAndClamp) {
  EXPECT_EQ(compute_strict(uniform(98), 5).final_ioci, 100);
  EXPECT_EQ(compute_strict(uniform(2), -5).final_ioci, 0);
  EXPECT_EQ(compute_strict(uniform(50), 3).final_ioci, 53);
  EXPECT_THROW(compute_strict(uniform(50), 6), Error);
  EXPECT_THROW(compute_strict({101, 50, 50, 50, 50}, 0), Error);
}

TEST(Strict, BandRespectingBaselineStaysInBand) {
  std::mt19937_64 rng(17);
  const NarrativeBand bands[] = {NarrativeBand::exceptionally_stable, NarrativeBand::mild,
                                 NarrativeBand::moderate, NarrativeBand::high,
                                 NarrativeBand::crisis};
  for (int trial = 0; trial < 2000; ++trial) {
    const auto b = band_range(bands[trial % 5]);
    std::uniform_int_distribution<int> u(b.lo, b.hi);
    DimensionScores d;
    for (auto& v : d) v = u(rng);
    const int f = compute_strict(d, 0).final_ioci;
    EXPECT_GE(f, b.lo);
    EXPECT_LE(f, b.hi);
  }
}

TEST(Constraint, BoxesWithBonuses) {
  const auto c = make_constraint(50, {StressorTag::funding, StressorTag::strategic}, false);
  EXPECT_EQ(c.boxes[0], (Box{35, 75}));
  EXPECT_EQ(c.boxes[1], (Box{35, 65}));
  EXPECT_EQ(c.boxes[4], (Box{35, 70}));
  const auto o = make_constraint(10, {StressorTag::enrolment}, true);
  EXPECT_EQ(o.boxes[1], (Box{0, 35}));
  EXPECT_EQ(o.boxes[0], (Box{0, 25}));
  const auto hi = make_constraint(95, {StressorTag::covid_disruption}, true);
  EXPECT_EQ(hi.boxes[2], (Box{75, 100}));
}

TEST(Calibration, TargetFiftyTwo) {
  const auto r = fit_calibration(uniform(50), 52, make_constraint(52, {}, false), {});
  EXPECT_EQ(r.dims, (DimensionScores{55, 50, 50, 50, 50}));
  EXPECT_EQ(r.l1, 5);
  EXPECT_EQ(compute_strict(r.dims, 0).raw, 51.5);
  EXPECT_EQ(exhaustive_min_l1(uniform(50), 52, make_constraint(52, {}, false), {}, 5), 5);
}

TEST(Calibration, AlreadySatisfied) {
  const auto r = fit_calibration(uniform(50), 50, make_constraint(50, {}, false), {});
  EXPECT_EQ(r.dims, uniform(50));
  EXPECT_EQ(r.l1, 0);
  EXPECT_EQ(r.steps, 0);
}

TEST(Calibration, TaggedDimensionMovesFirst) {
  const std::set<StressorTag> tags{StressorTag::enrolment};
  const auto r = fit_calibration(uniform(50), 51, make_constraint(51, tags, false), tags);
  EXPECT_EQ(r.dims, (DimensionScores{50, 52, 50, 50, 50}));
}

TEST(Calibration, DownwardWalk) {
  const auto r = fit_calibration(uniform(60), 58, make_constraint(58, {}, false), {});
  EXPECT_EQ(rounding_of_bp(weighted_raw_bp(r.dims)), 58);
  EXPECT_EQ(r.dims, (DimensionScores{54, 60, 60, 60, 60}));
}

TEST(Calibration, GreedyIsMinimalWithoutTags) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> base(20, 80), shift(-2, 2);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    DimensionScores b;
    for (auto& v : b) v = base(rng);
    const int now = rounding_of_bp(weighted_raw_bp(b));
    const int target = std::clamp(now + shift(rng), 0, 100);
    BandConstraint c;
    for (auto& box : c.boxes) box = {0, 100};
    const auto r = fit_calibration(b, target, c, {});
    const int best = exhaustive_min_l1(b, target, c, {}, 10);
    if (best == INT_MAX) continue;
    EXPECT_EQ(r.l1, best) << "trial " << trial;
    ++checked;
  }
  EXPECT_GE(checked, 30);
}

TEST(Calibration, StaysInsideBoxes) {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> t(0, 100), b(0, 100);
  for (int trial = 0; trial < 300; ++trial) {
    const int target = t(rng);
    DimensionScores base;
    for (auto& v : base) v = b(rng);
    const std::set<StressorTag> tags{static_cast<StressorTag>(trial % 5)};
    const auto c = make_constraint(target, tags, trial % 2 == 0);
    const auto r = fit_calibration(base, target, c, tags);
    EXPECT_EQ(rounding_of_bp(weighted_raw_bp(r.dims)), target);
    for (int i = 0; i < kDimensions; ++i) {
      EXPECT_GE(r.dims[i], c.boxes[i].lo);
      EXPECT_LE(r.dims[i], c.boxes[i].hi);
    }
    EXPECT_EQ(fit_calibration(base, target, c, tags).dims, r.dims);
  }
}

TEST(Calibration, PinnedBoxesFail) {
  BandConstraint c;
  for (auto& box : c.boxes) box = {30, 30};
  try {
    fit_calibration(uniform(30), 90, c, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "calibration fit failed");
  }
}

TEST(Calibration, StepBudgetExhausted) {
  BandConstraint c;
  for (auto& box : c.boxes) box = {0, 100};
  EXPECT_THROW(fit_calibration(uniform(0), 100, c, {}, IociWeights{}, 50), Error);
}

TEST(Feasibility, Examples) {
  const auto crisis = band_of("crisis");
  EXPECT_TRUE(feasibility_check(94, crisis).feasible);
  const auto f = feasibility_check(30, crisis);
  EXPECT_FALSE(f.feasible);
  EXPECT_EQ(f.closest, 81);
  EXPECT_EQ(f.flag, "Reference infeasible under evidence");
  EXPECT_TRUE(feasibility_check(81, crisis).feasible);
  EXPECT_TRUE(feasibility_check(100, crisis).feasible);
}

TEST(Confidence, Rules) {
  const auto rich = evidence(2014, 4);
  EXPECT_EQ(confidence(&rich, false), 0.85);
  const auto thin = evidence(2014, 2, true);
  EXPECT_EQ(confidence(&thin, false), 0.65);
  EXPECT_EQ(confidence_hundredths(&thin, false), 65);
  EXPECT_EQ(confidence(nullptr, true), 0.40);
  EXPECT_EQ(confidence(&rich, true), 0.40);
  const auto short_ledger = evidence(2014, 1);
  EXPECT_EQ(confidence_hundredths(&short_ledger, false), 75);
}

TEST(ScoreSeries, StrictSingleYear) {
  EvidencePack ev{{2014, evidence(2014, 3)}};
  const auto a = score_series(ev, std::nullopt, {{2014, {uniform(50), 0}}});
  EXPECT_EQ(a.sequence, (std::vector<int>{50}));
  EXPECT_FALSE(a.diagnostics.enabled);
  EXPECT_TRUE(a.series[0].flags.empty());
  EXPECT_EQ(a.series[0].confidence_hundredths, 85);
}

TEST(ScoreSeries, StrictOutsideBandFlagged) {
  EvidencePack ev{{2014, evidence(2014, 3, false, band_of("crisis"))}};
  const auto a = score_series(ev, std::nullopt, {{2014, {uniform(50), 0}}});
  EXPECT_EQ(a.series[0].flags, (std::vector<std::string>{"Score outside narrative band"}));
}

TEST(ScoreSeries, StrictMissingEvidence) {
  EvidencePack ev{{2014, evidence(2014, 0)}};
  const auto a = score_series(ev, std::nullopt, {});
  EXPECT_EQ(a.sequence, (std::vector<int>{50}));
  EXPECT_EQ(a.series[0].flags, (std::vector<std::string>{"Missing evidence for year"}));
  EXPECT_EQ(a.series[0].confidence_hundredths, 40);
}

TEST(ScoreSeries, ReferenceOnlyYear) {
  EvidencePack ev{{2014, evidence(2014, 3)}};
  const ReferenceSeries ref{{2014, 52}, {2030, 77}};
  const auto a = score_series(ev, ref, {{2014, {uniform(50), 0}}});
  ASSERT_EQ(a.series.size(), 2u);
  EXPECT_EQ(a.sequence, (std::vector<int>{52, 77}));
  EXPECT_EQ(a.series[1].year, 2030);
  EXPECT_EQ(a.series[1].flags, (std::vector<std::string>{"Used reference due to missing evidence"}));
  EXPECT_LE(a.series[1].confidence(), 0.4);
  EXPECT_EQ(a.series[0].dims, (DimensionScores{55, 50, 50, 50, 50}));
  EXPECT_EQ(a.series[0].sanity, 0);
  EXPECT_EQ(a.series[0].flags, (std::vector<std::string>{"fit_policy: v1"}));
  EXPECT_TRUE(a.diagnostics.enabled);
  EXPECT_EQ(a.diagnostics.mae, 0.0);
}

TEST(ScoreSeries, InfeasibleReferenceClamped) {
  EvidencePack ev{{2020, evidence(2020, 3, false, band_of("crisis"))}};
  const auto a = score_series(ev, ReferenceSeries{{2020, 60}}, {{2020, {uniform(60), 0}}});
  EXPECT_EQ(a.sequence, (std::vector<int>{81}));
  EXPECT_EQ(a.series[0].flags.front(), "Reference infeasible under evidence");
}

TEST(ScoreSeries, EmptyIsFlaggedNotThrown) {
  const auto a = score_series({}, std::nullopt, {});
  EXPECT_TRUE(a.series.empty());
  EXPECT_TRUE(a.sequence.empty());
  EXPECT_EQ(a.flags, (std::vector<std::string>{"No years provided in evidence or reference"}));
}

TEST(ScoreSeries, MissingBaselineIsError) {
  EvidencePack ev{{2014, evidence(2014, 3)}};
  EXPECT_THROW(score_series(ev, std::nullopt, {}), Error);
}

TEST(Diagnostics, Identity) {
  const auto d = compute_diagnostics({{1, 1}, {2, 2}, {3, 3}}, {{1, 1}, {2, 2}, {3, 3}});
  EXPECT_EQ(d.pearson_r, 1.0);
  EXPECT_EQ(d.spearman_rho, 1.0);
  EXPECT_EQ(d.mae, 0.0);
  EXPECT_EQ(d.rmse, 0.0);
}

TEST(Diagnostics, NullRules) {
  const auto one = compute_diagnostics({{1, 10}, {2, 20}}, {{2, 25}});
  EXPECT_FALSE(one.pearson_r);
  EXPECT_FALSE(one.spearman_rho);
  EXPECT_EQ(one.mae, 5.0);
  const auto none = compute_diagnostics({{1, 10}}, {{2, 25}});
  EXPECT_FALSE(none.mae);
  EXPECT_FALSE(none.rmse);
  EXPECT_TRUE(none.enabled);
  const auto flat = compute_diagnostics({{1, 10}, {2, 20}}, {{1, 5}, {2, 5}});
  EXPECT_FALSE(flat.pearson_r);
  EXPECT_TRUE(flat.mae);
}

TEST(Diagnostics, SpearmanWithTies) {
  const auto d = compute_diagnostics({{1, 1}, {2, 2}, {3, 3}, {4, 4}},
                                     {{1, 10}, {2, 10}, {3, 30}, {4, 20}});
  // ranks of output: 1.5, 1.5, 4, 3 against 1, 2, 3, 4
  const double rx[] = {1, 2, 3, 4}, ry[] = {1.5, 1.5, 4, 3};
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - 2.5) * (ry[i] - 2.5);
    sxx += (rx[i] - 2.5) * (rx[i] - 2.5);
    syy += (ry[i] - 2.5) * (ry[i] - 2.5);
  }
  EXPECT_NEAR(*d.spearman_rho, sxy / std::sqrt(sxx * syy), 1e-12);
}
