#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "adherence/evalkit.hpp"
#include "adherence/learn/dataset.hpp"

using namespace adherence;
using namespace adherence::eval;

namespace {

double mann_whitney(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

tasks::TaskSample risk_sample(int label, std::vector<int> calls, int doses = 0) {
  tasks::TaskSample s;
  s.label = label;
  s.call_seq = std::move(calls);
  s.manual_seq.assign(s.call_seq.size(), 0);
  s.doses_before_transition = doses;
  return s;
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(auc({0.5, 0.5, 0.5}, {0, 1, 1}), 0.5);
  EXPECT_DOUBLE_EQ(auc({1, 2, 3}, {0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(auc({3, 2, 1}, {0, 1, 1}), 0.0);
  const Roc r = roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
  EXPECT_EQ(r.points.front().fpr, 0.0);
  EXPECT_EQ(r.points.back().tpr, 1.0);
  EXPECT_EQ(r.points.back().fpr, 1.0);
  EXPECT_THROW(auc({1, 2}, {1, 1}), InvalidInput);
  EXPECT_THROW(auc({1, 2}, {1}), InvalidInput);
}

TEST(Auc, MatchesMannWhitneyAndIgnoresOrder) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> score(0, 9);
  std::bernoulli_distribution pos(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      y.push_back(pos(rng) ? 1 : 0);
      s.push_back(score(rng) + 2 * y.back());
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    EXPECT_NEAR(a, mann_whitney(s, y), 1e-12);
    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> s2;
    std::vector<int> y2;
    for (std::size_t p : perm) {
      s2.push_back(s[p]);
      y2.push_back(y[p]);
    }
    EXPECT_NEAR(auc(s2, y2), a, 1e-12);
    std::vector<double> mono;
    for (double v : s) mono.push_back(std::exp(v));
    EXPECT_NEAR(auc(mono, y), a, 1e-12);
  }
}

TEST(Cost, ProjectionReproducesWorkedNumbers) {
  const CostReport r = cost_projection(17000, 0.10, 0.80, 0.70, 0.42, 25, 216864);
  EXPECT_DOUBLE_EQ(r.positives, 1700);
  EXPECT_NEAR(r.true_positives, 1360, 1e-9);
  EXPECT_NEAR(r.false_positives_a, 10710, 1e-9);
  EXPECT_NEAR(r.false_positives_b, 6426, 1e-9);
  EXPECT_NEAR(r.savings / 37e6, 1.0, 0.01);
  const CostReport d = cost_projection(17000, 0.10, 0.80, 0.70, 0.42, 25, 2 * 216864);
  EXPECT_NEAR(d.savings, 2 * r.savings, 1e-6);
  EXPECT_THROW(cost_projection(1, 1.5, 0.8, 0.7, 0.4, 25, 1), InvalidInput);
  EXPECT_THROW(cost_projection(1, 0.1, 0.8, 0.7, 0.4, 0, 1), InvalidInput);
}

TEST(Improvement, TableArithmetic) {
  EXPECT_NEAR(100 * relative_improvement(204, 248), 21.6, 0.05);
  EXPECT_NEAR(100 * relative_improvement(204, 360), 76.5, 0.05);
}

TEST(DosesCaught, FixedFprComparison) {
  // Baseline (>= 3 misses) flags samples 0, 1 and 4; 1 FP of 3 negatives.
  std::vector<tasks::TaskSample> test{
      risk_sample(1, {0, 0, 0, 1, 1, 1, 1}, 2), risk_sample(1, {0, 0, 0, 0, 1, 1, 1}, 1),
      risk_sample(1, {0, 1, 1, 1, 1, 1, 1}, 4), risk_sample(0, {0, 1, 1, 1, 1, 1, 1}),
      risk_sample(0, {0, 0, 0, 1, 1, 1, 1}), risk_sample(0, {1, 1, 1, 1, 1, 1, 0})};
  const std::vector<double> model{0.9, 0.5, 0.8, 0.1, 0.2, 0.7};
  const DosesCaughtTable t = doses_caught(test, model);
  EXPECT_EQ(t.baseline.true_positives, 2);
  EXPECT_DOUBLE_EQ(t.baseline.fpr, 1.0 / 3.0);
  EXPECT_EQ(t.baseline.doses_caught, 3);
  EXPECT_EQ(t.model.true_positives, 3);
  EXPECT_LE(t.model.fpr, t.baseline.fpr);
  EXPECT_EQ(t.model.doses_caught, 7);
  EXPECT_DOUBLE_EQ(t.tp_improvement, 0.5);
  EXPECT_NEAR(t.doses_improvement, 4.0 / 3.0, 1e-12);
}

TEST(Fpr, MatchedTable) {
  const std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0};
  const std::vector<double> a{0.9, 0.8, 0.7, 0.1, 0.95, 0.6, 0.5, 0.4};
  const std::vector<double> b{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2};
  const Roc ra = roc_auc(a, y);
  EXPECT_DOUBLE_EQ(fpr_at_tpr(ra, 0.75), 0.25);
  EXPECT_DOUBLE_EQ(fpr_at_tpr(ra, 1.0), 1.0);
  const auto rows = fpr_matched_table(a, b, y, {0.75, 1.0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].fpr_b, 0.0);
  EXPECT_DOUBLE_EQ(rows[0].improvement, 1.0);
  EXPECT_DOUBLE_EQ(rows[1].fpr_b, 0.0);
  EXPECT_THROW(fpr_at_tpr(ra, 0.0), InvalidInput);
}

TEST(Pearson, Examples) {
  EXPECT_NEAR(pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3}, {3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-12);
  EXPECT_NEAR(prediction_correlation({5, 1, 2, 3}, {0, 2, 3, 4}, PairFilter::TrueAboveOne), 1.0, 1e-12);
  EXPECT_THROW(pearson({1, 2}, {1}), InvalidInput);
}

TEST(Occlusion, Properties) {
  tasks::TaskSample s;
  s.call_seq = {1, 0, 1, 1, 0, 1, 1};
  s.manual_seq.assign(7, 0);
  s.anchor = 13;
  s.cum_miss_seq = {0, 1, 1, 1, 2, 2, 2};
  s.features.assign(29, 1.0);
  std::vector<std::vector<double>> rows(10, std::vector<double>(29, 0.0));
  for (int i = 0; i < 10; ++i) rows[i][4] = i;
  const auto scaler = features::PercentileScaler::fit(rows);
  OcclusionReference ref;
  ref.call_mean = 0.8;
  ref.static_median.assign(29, 0.5);

  learn::LeapConfig c;
  c.lstm_hidden = 3;
  c.dense_in_units = 4;
  c.penult_units = 2;
  learn::LeapModel zero(c, 7);
  zero.set_zero();
  const Attribution z = occlusion_attribution(zero, s, scaler, ref);
  EXPECT_DOUBLE_EQ(z.prediction, 0.5);
  for (double v : z.days) EXPECT_DOUBLE_EQ(v, 0.0);
  for (double v : z.features) EXPECT_DOUBLE_EQ(v, 0.0);

  learn::LeapModel m(c, 7);
  m.init(4);
  const Attribution a = occlusion_attribution(m, s, scaler, ref);
  ASSERT_EQ(a.days.size(), 7u);
  ASSERT_EQ(a.features.size(), 29u);
  EXPECT_GT(std::count_if(a.days.begin(), a.days.end(), [](double v) { return v != 0.0; }), 0);
  m.zero_static_path();
  for (double v : occlusion_attribution(m, s, scaler, ref).features) EXPECT_DOUBLE_EQ(v, 0.0);
}
