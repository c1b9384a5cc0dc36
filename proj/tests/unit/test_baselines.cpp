#include <gtest/gtest.h>

#include <random>

#include "enrolcast/baselines.hpp"
#include "enrolcast/error.hpp"

using namespace enrolcast;

TEST(Persistence, CarriesLastValue) {
  const std::vector<double> h{120, 130, 125};
  const std::vector<double> levels{0.1, 0.5, 0.9};
  const auto fc = persistence_forecast(h, 3, levels);
  ASSERT_EQ(fc.steps.size(), 3u);
  for (const auto& s : fc.steps) {
    EXPECT_EQ(s.point, 125.0);
    for (double l : levels) EXPECT_EQ(s.quantiles.at(l), 125.0);
  }
}

TEST(Persistence, IgnoresMissingTail) {
  std::vector<Observation> pts{{2010, 5.0, 2010}, {2011, 7.0, 2011}, {2012, std::nullopt, 2012}};
  const auto fc = persistence_forecast(AnnualSeries("t", "", pts), 1);
  EXPECT_EQ(fc.steps[0].point, 7.0);
}

TEST(Persistence, RejectsEmptyAndBadHorizon) {
  EXPECT_THROW(persistence_forecast(std::vector<double>{}, 1), Error);
  EXPECT_THROW(persistence_forecast(std::vector<double>{1.0}, 0), Error);
}

TEST(Difference, FirstAndSecondOrder) {
  const std::vector<double> x{1, 4, 9, 16};
  EXPECT_EQ(difference(x, 1), (std::vector<double>{3, 5, 7}));
  EXPECT_EQ(difference(x, 2), (std::vector<double>{2, 2}));
  EXPECT_EQ(difference(x, 0), x);
  EXPECT_THROW(difference(x, 4), Error);
}

TEST(Difference, UndifferenceInverts) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(-100, 100);
  for (int d = 0; d <= 3; ++d) {
    std::vector<double> x(12);
    for (auto& v : x) v = u(rng);
    const auto w = difference(x, d);
    const std::vector<double> anchors(x.begin(), x.begin() + d);
    EXPECT_EQ(undifference(w, anchors, d), std::vector<double>(x.begin() + d, x.end()));
  }
}

TEST(Difference, UndifferenceNeedsAnchors) {
  const std::vector<double> w{1.0};
  EXPECT_THROW(undifference(w, std::vector<double>{}, 1), Error);
}
