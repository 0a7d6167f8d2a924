#include <gtest/gtest.h>

#include <random>

#include "adherence/attention.hpp"
#include "fixtures.hpp"

using namespace adherence;
using L = AttentionLevel;

TEST(AttentionStep, RuleExamples) {
  EXPECT_EQ(attention_step(0, L::High, false), L::Medium);
  EXPECT_EQ(attention_step(4, L::Medium, false), L::High);
  EXPECT_EQ(attention_step(3, L::High, false), L::High);
  EXPECT_EQ(attention_step(2, L::Medium, false), L::Medium);
  EXPECT_EQ(attention_step(6, L::Medium, true), L::Medium);
  EXPECT_THROW(attention_step(8, L::Medium, false), InvalidInput);
  EXPECT_THROW(attention_step(-1, L::Medium, false), InvalidInput);
}

TEST(AttentionStep, NoteOverrideFlag) {
  AttentionRules rules;
  rules.note_overrides_high = false;
  EXPECT_EQ(attention_step(5, L::Medium, true, rules), L::High);
  EXPECT_EQ(attention_step(3, L::High, true, rules), L::Medium);
}

TEST(AttentionTimeline, AllCallsStayMedium) {
  const auto cal = fixtures::calendar_from(std::string(30, '1'));
  const auto tl = attention_timeline(cal, {});
  for (auto l : tl.levels) EXPECT_EQ(l, L::Medium);
}

TEST(AttentionTimeline, FourMissesFromDay8HighOnDay11) {
  std::string days(20, '1');
  for (int d = 8; d < 12; ++d) days[d] = '0';
  const auto tl = attention_timeline(fixtures::calendar_from(days), {});
  for (int d = 0; d < 11; ++d) EXPECT_EQ(tl.at(d), L::Medium) << d;
  EXPECT_EQ(tl.at(11), L::High);
  EXPECT_EQ(tl.at(15), L::High);  // 3 misses still in the window
  EXPECT_EQ(tl.at(17), L::Medium);
}

TEST(AttentionTimeline, NoteForcesMediumForAWeek) {
  std::string days(20, '0');
  const auto cal = fixtures::calendar_from(days);
  WorkerNote n;
  n.patient_id = "P1";
  n.timestamp = {cal.date_of(10), 600};
  const auto tl = attention_timeline(cal, std::vector<WorkerNote>{n});
  EXPECT_EQ(tl.at(9), L::High);
  for (int d = 10; d <= 16; ++d) EXPECT_EQ(tl.at(d), L::Medium) << d;
  EXPECT_EQ(tl.at(17), L::High);
}

TEST(AttentionTimeline, MatchesIndependentReplay) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 10 + static_cast<int>(rng() % 60);
    std::string days;
    for (int d = 0; d < n; ++d) days.push_back(rng() % 3 == 0 ? '0' : '1');
    const auto tl = attention_timeline(fixtures::calendar_from(days), {});
    bool high = false;
    for (int t = 0; t < n; ++t) {
      int m = 0;
      for (int d = t - 6; d <= t; ++d) m += d >= 0 && days[d] == '0';
      if (m <= 1) high = false;
      if (m >= 4) high = true;
      ASSERT_EQ(tl.at(t) == L::High, high) << "rep " << rep << " day " << t;
    }
  }
}

TEST(ScreenRiskPoint, Examples) {
  // MEDIUM at t = 10, misses on t+1..t+4 -> transition on t+4.
  std::string days(25, '1');
  for (int d = 11; d <= 14; ++d) days[d] = '0';
  const auto cal = fixtures::calendar_from(days);
  const auto tl = attention_timeline(cal, {});
  const RiskPoint p = screen_risk_point(tl, cal, 10);
  EXPECT_TRUE(p.eligible);
  EXPECT_EQ(p.label, 1);
  ASSERT_TRUE(p.transition_day);
  EXPECT_EQ(*p.transition_day, 14);
  // HIGH at t -> ineligible.
  EXPECT_FALSE(screen_risk_point(tl, cal, 15).eligible);
  const RiskPoint q = screen_risk_point(tl, cal, 0);
  EXPECT_TRUE(q.eligible);
  EXPECT_EQ(q.label, 0);
  EXPECT_EQ(q.label_day(0), 7);
  EXPECT_THROW(screen_risk_point(tl, cal, 20), OutOfRange);
}

TEST(ScreenRiskPoint, SoundnessOnRandomCalendars) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    std::string days;
    for (int d = 0; d < 40; ++d) days.push_back(rng() % 3 == 0 ? '0' : '1');
    const auto cal = fixtures::calendar_from(days);
    const auto tl = attention_timeline(cal, {});
    for (int t = 0; t + 7 < 40; ++t) {
      const RiskPoint p = screen_risk_point(tl, cal, t);
      if (!p.eligible) continue;
      const int end = p.label ? *p.transition_day : t + 7;
      for (int d = t; d < end; ++d) ASSERT_EQ(tl.at(d), L::Medium);
      if (p.label) {
        ASSERT_EQ(tl.at(end), L::High);
      }
    }
  }
}
