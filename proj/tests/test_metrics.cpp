#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pcamil/metrics.hpp"
#include "pcamil/stats.hpp"

namespace pcamil {
namespace {

ScoredCohort cohort(const std::vector<int>& y, const std::vector<double>& s) {
  ScoredCohort c;
  for (std::size_t i = 0; i < y.size(); ++i) c.add("P" + std::to_string(i), y[i] ? Label::MSI : Label::MSS, s[i]);
  return c;
}

/// Random cohort with scores on a coarse grid so ties are frequent.
std::pair<std::vector<int>, std::vector<double>> random_cohort(std::mt19937_64& rng, bool need_negative) {
  std::uniform_int_distribution<int> n_d(2, 12), grid(0, 6), bit(0, 1);
  for (;;) {
    const int n = n_d(rng);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) {
      y[i] = bit(rng);
      s[i] = grid(rng) / 6.0;
    }
    const int pos = std::accumulate(y.begin(), y.end(), 0);
    if (pos > 0 && (!need_negative || pos < n)) return {y, s};
  }
}

TEST(RocAuc, Examples) {
  EXPECT_EQ(roc_auc(cohort({1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1})), 1.0);
  EXPECT_EQ(roc_auc(cohort({1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5})), 0.5);
  EXPECT_EQ(roc_auc(cohort({0, 0, 1, 1}, {0.1, 0.4, 0.35, 0.8})), 0.75);
}

TEST(RocAuc, SingleClassRejected) {
  try {
    roc_auc(cohort({1, 1}, {0.2, 0.3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClassCohort);
  }
}

TEST(RocAuc, MatchesPairwiseEnumeration) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto [y, s] = random_cohort(rng, true);
    EXPECT_NEAR(roc_auc(cohort(y, s)), oracle::pairwise_auc(y, s), 1e-15) << "cohort " << t;
  }
}

TEST(RocAuc, InvariantUnderMonotoneMapAndFlipsWithLabels) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> y{1, 0};
    std::vector<double> s{u(rng), u(rng)};
    for (int i = 0; i < 10; ++i) {
      y.push_back(static_cast<int>(rng() % 2));
      s.push_back(u(rng));
    }
    std::vector<double> mapped(s.size());
    std::transform(s.begin(), s.end(), mapped.begin(), [](double v) { return v * v * v; });
    std::vector<int> flipped(y.size());
    std::transform(y.begin(), y.end(), flipped.begin(), [](int v) { return 1 - v; });
    const double auc = roc_auc(cohort(y, s));
    EXPECT_NEAR(roc_auc(cohort(y, mapped)), auc, 1e-15);
    EXPECT_NEAR(roc_auc(cohort(flipped, s)), 1.0 - auc, 1e-12);
  }
}

TEST(AveragePrecision, Examples) {
  EXPECT_EQ(average_precision(cohort({1, 0}, {0.9, 0.1})), 1.0);
  EXPECT_EQ(average_precision(cohort({1, 0}, {0.1, 0.9})), 0.5);
  EXPECT_NEAR(average_precision(cohort({1, 0, 0, 1, 0}, {0.3, 0.3, 0.3, 0.3, 0.3})), 0.4, 1e-15);
  try {
    average_precision(cohort({0, 0}, {0.1, 0.2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPositives);
  }
}

TEST(AveragePrecision, MatchesBlockEnumeration) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto [y, s] = random_cohort(rng, false);
    EXPECT_NEAR(average_precision(cohort(y, s)), oracle::thresholded_ap(y, s), 1e-12) << "cohort " << t;
  }
}

TEST(BinaryReport, HandComputedFixture) {
  const auto r = binary_report(ConfusionCounts{2, 1, 1, 6});
  EXPECT_NEAR(r.f1, 0.66667, 5e-6);
  EXPECT_NEAR(r.accuracy, 0.8, 1e-15);
  EXPECT_NEAR(r.kappa, 0.52381, 5e-6);
}

TEST(BinaryReport, PerfectAgreement) {
  const auto r = binary_report(cohort({1, 0, 1, 0}, {0.9, 0.1, 0.5, 0.49}), 0.5);
  EXPECT_EQ(r.counts.tp, 2u);
  EXPECT_EQ(r.counts.tn, 2u);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.kappa, 1.0);
}

TEST(BinaryReport, DegenerateConventions) {
  // No positives and no positive predictions: F1 is 0 and p_e = 1 with
  // perfect agreement gives kappa 1.
  const auto none = binary_report(ConfusionCounts{0, 0, 0, 5});
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(none.kappa, 1.0);
  EXPECT_EQ(none.accuracy, 1.0);
  EXPECT_EQ(binary_report(ConfusionCounts{}).f1, 0.0);
}

TEST(BinaryReport, IndependentPredictionsGiveZeroKappa) {
  // Predictions balanced within each class: the 2x2 table factorises.
  const auto r = binary_report(ConfusionCounts{3, 6, 3, 6});
  EXPECT_NEAR(r.kappa, 0.0, 1e-15);
}

TEST(BinaryReport, ThresholdValidated) {
  EXPECT_THROW(binary_report(cohort({1, 0}, {0.2, 0.4}), 1.5), Error);
}

TEST(PairedTTest, Fixture) {
  const std::vector<double> d{0.1, 0.2, 0.15, 0.05, 0.1};
  const std::vector<double> zero(5, 0.0);
  const auto r = paired_t_test(d, zero);
  EXPECT_NEAR(r.statistic, 4.707, 5e-4);
  EXPECT_NEAR(r.p_value, 0.0093, 5e-5);
  EXPECT_NEAR(r.p_value, oracle::t_two_sided_p(r.statistic, 4), 1e-6);
}

TEST(PairedTTest, MatchesIntegratedDensity) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.05, 0.1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(3 + t % 6), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
    }
    const auto r = paired_t_test(a, b);
    EXPECT_NEAR(r.p_value, oracle::t_two_sided_p(r.statistic, static_cast<double>(a.size() - 1)), 1e-6);
  }
}

TEST(PairedTTest, DegenerateCases) {
  const std::vector<double> a{0.3, 0.5, 0.7};
  const auto same = paired_t_test(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const std::vector<double> b{0.2, 0.4, 0.6};
  const auto shifted = paired_t_test(b, a);
  EXPECT_EQ(shifted.p_value, 0.0);
  EXPECT_TRUE(std::isinf(shifted.statistic));
  EXPECT_LT(shifted.statistic, 0.0);
}

TEST(PairedTTest, Errors) {
  const std::vector<double> a{1, 2, 3}, b{1, 2}, one{1};
  try {
    paired_t_test(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    paired_t_test(one, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewFolds);
  }
}

std::pair<std::vector<bool>, std::vector<bool>> discordant(int b, int c, int concordant = 3) {
  std::vector<bool> x, y;
  for (int i = 0; i < b; ++i) x.push_back(true), y.push_back(false);
  for (int i = 0; i < c; ++i) x.push_back(false), y.push_back(true);
  for (int i = 0; i < concordant; ++i) x.push_back(i % 2 == 0), y.push_back(i % 2 == 0);
  return {x, y};
}

TEST(McNemar, Examples) {
  auto [a, b] = discordant(10, 2);
  const auto r = mcnemar_test(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.a_only, 10u);
  EXPECT_EQ(r.b_only, 2u);
  EXPECT_NEAR(r.p_value, 158.0 / 4096.0, 1e-15);
  EXPECT_NEAR(r.p_value, 0.03857, 5e-6);

  auto [c, d] = discordant(5, 5);
  EXPECT_EQ(mcnemar_test(c, d).p_value, 1.0);
  auto [e, f] = discordant(0, 0);
  EXPECT_EQ(mcnemar_test(e, f).p_value, 1.0);
}

TEST(McNemar, ExactBranchMatchesEnumeration) {
  for (int b = 0; b <= 10; ++b) {
    for (int c = 0; b + c <= 10; ++c) {
      auto [x, y] = discordant(b, c);
      EXPECT_NEAR(mcnemar_test(x, y).p_value, oracle::mcnemar_enumerated(b, c), 1e-15) << b << "," << c;
    }
  }
}

TEST(McNemar, SwitchesToChiSquareAbove25) {
  auto [x, y] = discordant(13, 12);
  EXPECT_TRUE(mcnemar_test(x, y).exact);
  auto [u, v] = discordant(20, 6);
  const auto r = mcnemar_test(u, v);
  EXPECT_FALSE(r.exact);
  EXPECT_NEAR(r.statistic, 13.0 * 13.0 / 26.0, 1e-12);
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(r.statistic / 2.0)), 1e-12);
}

TEST(McNemar, LengthMismatch) { EXPECT_THROW(mcnemar_test({true}, {true, false}), Error); }

TEST(AggregateFolds, Examples) {
  const std::vector<double> same(5, 0.7);
  const auto s = aggregate_folds(same);
  EXPECT_NEAR(s.mean, 0.7, 1e-15);
  EXPECT_EQ(s.sd, 0.0);
  EXPECT_NEAR(s.ci_low, 0.7, 1e-15);
  EXPECT_NEAR(s.ci_high, 0.7, 1e-15);

  const std::vector<double> two{0.8, 0.9};
  const auto t = aggregate_folds(two);
  EXPECT_NEAR(t.mean, 0.85, 1e-15);
  EXPECT_NEAR(t.sd, 0.0707107, 1e-6);
  EXPECT_NEAR(t.ci_low, 0.85 - 12.7062 * 0.05, 1e-3);
  EXPECT_EQ(t.ci_high, 1.0);
}

TEST(AggregateFolds, IntervalUsesTQuantile) {
  const std::vector<double> v{0.61, 0.72, 0.65, 0.70, 0.68};
  const auto s = aggregate_folds(v);
  const double half = oracle::t_quantile(0.975, 4) * s.sd / std::sqrt(5.0);
  EXPECT_NEAR(s.ci_high - s.mean, half, 1e-6);
  EXPECT_NEAR(s.mean - s.ci_low, half, 1e-6);
}

TEST(AggregateFolds, UnboundedKeepsNegativeInterval) {
  const std::vector<double> v{-0.1, 0.3};
  EXPECT_LT(aggregate_folds(v, false).ci_low, 0.0);
  EXPECT_EQ(aggregate_folds(v, true).ci_low, 0.0);
  const std::vector<double> one{0.5};
  EXPECT_THROW(aggregate_folds(one), Error);
}

}  // namespace
}  // namespace pcamil
