#include <gtest/gtest.h>

#include <random>
#include <set>

#include "adherence/featurize.hpp"
#include "fixtures.hpp"

using namespace adherence;
using namespace adherence::features;
using fixtures::calendar_from;
using fixtures::record_for;

namespace {

double feat(const std::vector<double>& v, std::string_view name) {
  return v.at(static_cast<std::size_t>(FeatureSchema::v1().index_of(name)));
}

}  // namespace

TEST(Schema, TwentyNineUniqueNames) {
  const auto& s = FeatureSchema::v1();
  EXPECT_EQ(s.size(), 29u);
  EXPECT_EQ(static_cast<int>(s.size()), kFeatureCount);
  std::set<std::string> names;
  for (const auto& f : s.features) names.insert(f.name);
  EXPECT_EQ(names.size(), 29u);
  EXPECT_TRUE(s.features[s.index_of("center_id")].categorical);
  EXPECT_THROW(s.index_of("nope"), InvalidInput);
}

TEST(StaticFeatures, CallTimingMoments) {
  const Date start = Date::from_ymd(2018, 1, 1);
  std::vector<DayStatus> st{DayStatus::TakenCall, DayStatus::Missed};
  std::vector<std::vector<CallStamp>> calls{{{Timestamp{start, 9 * 60}, "a"}, {Timestamp{start, 9 * 60 + 30}, "a"}}, {}};
  const AdherenceCalendar cal("P1", start, st, calls);
  const auto f = static_features(cal, record_for("P1", 2), 0, 1);
  ASSERT_EQ(f.size(), 29u);
  EXPECT_DOUBLE_EQ(feat(f, "mean_call_minute"), 15.0);
  EXPECT_DOUBLE_EQ(feat(f, "var_call_minute"), 225.0);
  EXPECT_DOUBLE_EQ(feat(f, "mean_call_hour"), 9.0);
  EXPECT_DOUBLE_EQ(feat(f, "var_call_hour"), 0.0);
  EXPECT_DOUBLE_EQ(feat(f, "calls_only.n_events"), 2.0);
  EXPECT_DOUBLE_EQ(feat(f, "calls_only.max_per_day"), 2.0);
  EXPECT_DOUBLE_EQ(feat(f, "unique_calls.n_events"), 1.0);
  EXPECT_DOUBLE_EQ(feat(f, "weight_band"), 1.0);
  EXPECT_DOUBLE_EQ(feat(f, "age_band"), 2.0);
  EXPECT_DOUBLE_EQ(feat(f, "center_id"), category_code("C1"));
}

TEST(StaticFeatures, SentinelsAndGaps) {
  const auto none = static_features(calendar_from("0000000"), record_for("P1", 7), 0, 6);
  EXPECT_DOUBLE_EQ(feat(none, "mean_call_minute"), -1.0);
  EXPECT_DOUBLE_EQ(feat(none, "var_call_hour"), -1.0);
  EXPECT_DOUBLE_EQ(feat(none, "all_events.mean_gap_days"), 7.0);
  EXPECT_DOUBLE_EQ(feat(none, "all_events.max_gap_days"), 7.0);

  // Events on days 0, 1 and 4: gaps {1, 3}. The manual day counts for all_events only.
  const auto f = static_features(calendar_from("1m00100"), record_for("P1", 7), 0, 6);
  EXPECT_DOUBLE_EQ(feat(f, "all_events.n_events"), 3.0);
  EXPECT_DOUBLE_EQ(feat(f, "all_events.mean_gap_days"), 2.0);
  EXPECT_DOUBLE_EQ(feat(f, "all_events.var_gap_days"), 1.0);
  EXPECT_DOUBLE_EQ(feat(f, "all_events.max_gap_days"), 3.0);
  EXPECT_DOUBLE_EQ(feat(f, "calls_only.n_events"), 2.0);
  EXPECT_DOUBLE_EQ(feat(f, "calls_only.mean_gap_days"), 4.0);
  EXPECT_NEAR(feat(f, "all_events.mean_per_day"), 3.0 / 7.0, 1e-15);
  EXPECT_THROW(static_features(calendar_from("111"), record_for("P1", 3), 0, 3), OutOfRange);
}

TEST(Scaler, PercentileExample) {
  std::vector<std::vector<double>> rows;
  for (double v : {10.0, 20.0, 30.0}) {
    std::vector<double> r(29, 0.0);
    r[4] = v;
    rows.push_back(r);
  }
  const auto s = PercentileScaler::fit(rows);
  EXPECT_DOUBLE_EQ(s.transform_one(4, 20.0), 0.5);
  EXPECT_DOUBLE_EQ(s.transform_one(4, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(s.transform_one(4, 100.0), 1.0);
  EXPECT_DOUBLE_EQ(s.transform_one(4, 15.0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.transform_one(0, 0.0), 0.5);
  EXPECT_THROW(s.transform(std::vector<double>(3, 0.0)), InvalidInput);
  EXPECT_THROW(PercentileScaler().transform(rows[0]), InvalidInput);
  EXPECT_THROW(PercentileScaler::fit({}), InvalidInput);
}

TEST(Scaler, CategoricalFrequencyRank) {
  std::vector<std::vector<double>> rows;
  const int idx = FeatureSchema::v1().index_of("center_id");
  for (const char* c : {"A", "A", "A", "B", "B", "C"}) {
    std::vector<double> r(29, 0.0);
    r[idx] = category_code(c);
    rows.push_back(r);
  }
  const auto s = PercentileScaler::fit(rows);
  // Ranks A=0 (x3), B=1 (x2), C=2 (x1).
  EXPECT_DOUBLE_EQ(s.transform_one(idx, category_code("A")), 1.5 / 6.0);
  EXPECT_DOUBLE_EQ(s.transform_one(idx, category_code("B")), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(s.transform_one(idx, category_code("C")), 5.5 / 6.0);
  EXPECT_DOUBLE_EQ(s.transform_one(idx, category_code("unseen")), 1.0);
}

TEST(Scaler, BoundedMonotoneAndJsonRoundTrip) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 5.0);
  std::vector<std::vector<double>> rows(200, std::vector<double>(29));
  for (auto& r : rows) for (auto& v : r) v = std::round(g(rng));
  const auto s = PercentileScaler::fit(rows);
  const auto back = PercentileScaler::from_json(s.to_json());
  for (int f = 0; f < 29; ++f) {
    if (f == 3) continue;
    double prev = -1.0;
    for (double v = -30; v <= 30; v += 0.5) {
      const double t = s.transform_one(f, v);
      EXPECT_GE(t, 0.0);
      EXPECT_LE(t, 1.0);
      EXPECT_GE(t, prev);
      EXPECT_EQ(back.transform_one(f, v), t);
      prev = t;
    }
  }
}

TEST(Smote, BalancesAndInterpolates) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({g(rng), g(rng), g(rng)});
    labels.push_back(i < 12 ? 1 : 0);
  }
  const auto r = smote(rows, labels, 5, 4);
  ASSERT_EQ(r.rows.size(), 96u);
  EXPECT_EQ(std::count(r.labels.begin(), r.labels.end(), 1), 48);
  EXPECT_TRUE(r.warnings.empty());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(r.rows[i], rows[i]);
  for (std::size_t i = rows.size(); i < r.rows.size(); ++i) {
    EXPECT_EQ(r.labels[i], 1);
    EXPECT_EQ(labels[r.parent[i]], 1);
    EXPECT_EQ(labels[r.neighbor[i]], 1);
    EXPECT_NE(r.parent[i], r.neighbor[i]);
    const auto& a = rows[r.parent[i]];
    const auto& b = rows[r.neighbor[i]];
    const double u = (r.rows[i][0] - a[0]) / (b[0] - a[0]);
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 1.0);
    for (int f = 1; f < 3; ++f) EXPECT_NEAR(r.rows[i][f], a[f] + u * (b[f] - a[f]), 1e-9);
  }
  EXPECT_EQ(smote(rows, labels, 5, 4).rows, r.rows);
}

TEST(Smote, SmallMinorityWarnsAndBadInputThrows) {
  const auto r = smote({{0.0}, {1.0}, {2.0}, {3.0}}, {1, 1, 0, 0}, 3, 1);
  EXPECT_EQ(r.rows.size(), 4u);
  const auto w = smote({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}}, {1, 1, 0, 0, 0}, 3, 1);
  EXPECT_EQ(w.rows.size(), 6u);
  EXPECT_FALSE(w.warnings.empty());
  EXPECT_THROW(smote({{0.0}}, {2}, 3, 1), InvalidInput);
  EXPECT_THROW(smote({{0.0}, {1.0}}, {0, 0}, 3, 1), InvalidInput);
  EXPECT_THROW(smote({{0.0}}, {0, 1}, 3, 1), InvalidInput);
}
