#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "respscreen/errors.hpp"
#include "respscreen/metrics.hpp"
#include "respscreen/rng.hpp"

using namespace respscreen;
using namespace respscreen::evaluate;

TEST(RocAuc, WorkedExamples) {
  const std::vector<int> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), SingleClass);
}

TEST(RocAuc, MatchesPairwiseOracleWithTies) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      s.push_back(std::round(rng.uniform(0, 8)));  // heavy ties
      y.push_back(rng.uniform() < 0.4 ? 1 : 0);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(roc_auc(s, y), oracle::pairwise_auc(s, y), 1e-12);
  }
}

TEST(RocAuc, InvariantUnderMonotoneTransforms) {
  Rng rng(2);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    s.push_back(rng.normal());
    y.push_back(i % 3 == 0);
  }
  const double base = roc_auc(s, y);
  std::vector<double> t1, t2;
  for (double v : s) {
    t1.push_back(std::exp(3.0 * v) + 1.0);
    t2.push_back(1.0 / (1.0 + std::exp(-v)));
  }
  EXPECT_DOUBLE_EQ(roc_auc(t1, y), base);
  EXPECT_DOUBLE_EQ(roc_auc(t2, y), base);
}

TEST(PrecisionRecall, WorkedExamples) {
  // TP=3, FP=1, FN=1.
  const auto a = precision_recall(std::vector<double>{1, 1, 1, 1, 0, 0}, std::vector<int>{1, 1, 1, 0, 1, 0}, 0.5);
  EXPECT_DOUBLE_EQ(a.precision, 0.75);
  EXPECT_DOUBLE_EQ(a.recall, 0.75);
  EXPECT_FALSE(a.precision_undefined);

  const auto none = precision_recall(std::vector<double>{-1, -1}, std::vector<int>{1, 0}, 0.0);
  EXPECT_TRUE(none.precision_undefined);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);

  const auto all = precision_recall(std::vector<double>{1, 1, 1, 1}, std::vector<int>{1, 0, 1, 0}, 0.0);
  EXPECT_DOUBLE_EQ(all.precision, 0.5);
  EXPECT_DOUBLE_EQ(all.recall, 1.0);

  EXPECT_THROW(precision_recall(std::vector<double>{0.5}, std::vector<int>{1}, 0.5), SingleClass);
}
