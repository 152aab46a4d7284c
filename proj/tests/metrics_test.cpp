#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "arrival/metrics.hpp"
#include "arrival/rng.hpp"

using namespace arrival;

namespace {

double pairwise_auc(const std::vector<ScoredLabel>& items) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& p : items) {
    if (!p.label) continue;
    for (const auto& n : items) {
      if (n.label) continue;
      pairs += 1.0;
      wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(RocAuc, Examples) {
  EXPECT_EQ(roc_auc(std::vector<ScoredLabel>{{0.9, true}, {0.8, true}, {0.1, false}}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<ScoredLabel>{{0.5, true}, {0.5, false}, {0.5, false}}), 0.5);
  const std::vector<ScoredLabel> mixed = {{0.9, true}, {0.4, false}, {0.6, true}, {0.5, false}};
  EXPECT_EQ(roc_auc(mixed), 1.0);
  const std::vector<ScoredLabel> swapped = {{0.9, true}, {0.4, false}, {0.6, false}, {0.5, true}};
  EXPECT_EQ(pairwise_auc(swapped), 0.75);
  EXPECT_EQ(roc_auc(swapped), 0.75);
}

TEST(RocAuc, SingleClassThrows) {
  EXPECT_THROW(roc_auc(std::vector<ScoredLabel>{{0.1, true}, {0.2, true}}), std::domain_error);
  EXPECT_THROW(roc_auc(std::vector<ScoredLabel>{}), std::domain_error);
  EXPECT_THROW(roc_auc(std::vector<ScoredLabel>{{std::nan(""), true}, {0.2, false}}),
               std::domain_error);
}

TEST(RocAuc, MatchesPairwiseOracleFlipsAndTransforms) {
  Rng rng(601);
  for (int n = 0; n < 300; ++n) {
    std::vector<ScoredLabel> items(2 + rng.below(120));
    for (auto& it : items) {
      it.score = double(rng.below(15)) / 4.0;  // coarse grid forces ties
      it.label = rng.uniform() < 0.4;
    }
    items[0].label = true;
    items[1].label = false;
    const double auc = roc_auc(items);
    EXPECT_NEAR(auc, pairwise_auc(items), 1e-12);

    auto flipped = items;
    for (auto& it : flipped) it.label = !it.label;
    EXPECT_NEAR(auc + roc_auc(flipped), 1.0, 1e-12);

    auto transformed = items;
    for (auto& it : transformed) it.score = std::exp(3.0 * it.score) - 7.0;
    EXPECT_EQ(roc_auc(transformed), auc);
  }
}

TEST(Phm08Loss, Examples) {
  EXPECT_EQ(phm08_loss(0.0), 0.0);
  EXPECT_NEAR(phm08_loss(10.0), std::numbers::e - 1.0, 1e-14);
  EXPECT_NEAR(phm08_loss(-13.0), std::numbers::e - 1.0, 1e-14);
  EXPECT_NEAR(phm08_loss(13.0), std::exp(1.3) - 1.0, 1e-14);
  EXPECT_NEAR(std::exp(1.3) - 1.0, 2.6693, 1e-4);
  EXPECT_THROW(phm08_loss(INFINITY), std::domain_error);
}

TEST(Phm08Loss, ContinuousAtZeroAndIncreasingInMagnitude) {
  EXPECT_NEAR(phm08_loss(1e-12), 0.0, 1e-12);
  EXPECT_NEAR(phm08_loss(-1e-12), 0.0, 1e-12);
  for (double d = 0.0; d < 60.0; d += 0.5) {
    EXPECT_LT(phm08_loss(d), phm08_loss(d + 0.5));
    EXPECT_LT(phm08_loss(-d), phm08_loss(-d - 0.5));
    if (d > 0.0) {
      EXPECT_GT(phm08_loss(d), phm08_loss(-d));
    }
  }
}

TEST(MeanCustomLoss, Examples) {
  EXPECT_EQ(mean_custom_loss(std::vector<RulPrediction>{{4.0, 4.0}, {0.0, 0.0}}), 0.0);
  EXPECT_NEAR(mean_custom_loss(std::vector<RulPrediction>{{110.0, 100.0}}), std::numbers::e - 1.0,
              1e-14);
  EXPECT_NEAR(mean_custom_loss(std::vector<RulPrediction>{{20.0, 10.0}, {0.0, 13.0}}),
              std::numbers::e - 1.0, 1e-14);
  EXPECT_THROW(mean_custom_loss(std::vector<RulPrediction>{}), std::invalid_argument);
}

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse(std::vector<RulPrediction>{{5.0, 5.0}}), 0.0);
  EXPECT_EQ(rmse(std::vector<RulPrediction>{{8.0, 5.0}}), 3.0);
  const double expected = std::sqrt(12.5);
  EXPECT_NEAR(expected, 3.5355339, 1e-7);
  EXPECT_NEAR(rmse(std::vector<RulPrediction>{{3.0, 0.0}, {0.0, 4.0}}), expected, 1e-14);
  EXPECT_THROW(rmse(std::vector<RulPrediction>{}), std::invalid_argument);
  EXPECT_THROW(rmse(std::vector<RulPrediction>{{-1.0, 0.0}}), std::domain_error);
}

TEST(AucQuantileSummary, Examples) {
  const auto one = auc_quantile_summary(std::vector{0.7});
  for (double v : {one.min, one.q25, one.q50, one.q75, one.max, one.mean}) EXPECT_EQ(v, 0.7);

  const auto s = auc_quantile_summary(std::vector{0.9, 0.6, 0.8, 0.7});
  EXPECT_NEAR(s.q50, 0.75, 1e-15);
  EXPECT_NEAR(s.q25, 0.675, 1e-15);
  EXPECT_NEAR(s.q75, 0.825, 1e-15);
  EXPECT_EQ(s.min, 0.6);
  EXPECT_EQ(s.max, 0.9);
  EXPECT_NEAR(s.mean, 0.75, 1e-15);
  EXPECT_THROW(auc_quantile_summary(std::vector<double>{}), std::invalid_argument);
}

TEST(AucQuantileSummary, OrderedFields) {
  Rng rng(602);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> v(1 + rng.below(40));
    for (auto& x : v) x = rng.uniform();
    const auto s = auc_quantile_summary(v);
    EXPECT_LE(s.min, s.q25);
    EXPECT_LE(s.q25, s.q50);
    EXPECT_LE(s.q50, s.q75);
    EXPECT_LE(s.q75, s.max);
    EXPECT_GE(s.mean, s.min);
    EXPECT_LE(s.mean, s.max);
  }
}
