#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "adherence/simkit.hpp"
#include "adherence/tasklab.hpp"
#include "fixtures.hpp"

using namespace adherence;
using namespace adherence::tasks;
using fixtures::history_from;

namespace {

const Cohort& sim_cohort() {
  static const Cohort cohort = [] {
    sim::SimConfig c;
    c.n_patients = 300;
    c.seed = 21;
    return sim::to_cohort(sim::simulate_cohort(c));
  }();
  return cohort;
}

}  // namespace

TEST(RiskSamples, HandExample) {
  const std::string days = "1111111" "1111110" "0001111" "111111111";
  const auto s = gen_risk_samples({history_from(days)});
  ASSERT_FALSE(s.empty());
  EXPECT_EQ(s[0].anchor, 13);
  EXPECT_EQ(s[0].label, 1);
  EXPECT_EQ(s[0].transition_day, 16);
  EXPECT_EQ(s[0].doses_before_transition, 2);
  EXPECT_EQ(s[0].call_seq, (std::vector<int>{1, 1, 1, 1, 1, 1, 0}));
  EXPECT_EQ(s[0].cum_miss_seq, (std::vector<int>{0, 0, 0, 0, 0, 0, 1}));
  EXPECT_EQ(s[0].k(), 7);
  EXPECT_EQ(s[0].features.size(), 29u);
}

TEST(RiskSamples, Filters) {
  const std::string tail = "1111111" "111111111";
  // Three manual days in the input week.
  EXPECT_TRUE(gen_risk_samples({history_from("1111111" "mmm0111" + tail)}).empty());
  // No miss in the input week.
  EXPECT_TRUE(gen_risk_samples({history_from("1111111" "1111111" + tail)}).empty());
  // Two manual days are fine.
  EXPECT_EQ(gen_risk_samples({history_from("1111111" "mm10111" + tail)}).size(), 1u);
  // HIGH at the anchor is not eligible.
  EXPECT_TRUE(gen_risk_samples({history_from("1111111" "1110000" + tail)}).empty());
  // The label window has to end before the final day: n = 21 leaves no anchor.
  EXPECT_TRUE(gen_risk_samples({history_from("1111111" "1111110" "1111111")}).empty());
  EXPECT_EQ(gen_risk_samples({history_from("1111111" "1111110" "11111111")}).size(), 1u);
}

TEST(RiskSamples, SimulatedSamplesMatchScreening) {
  const Cohort& cohort = sim_cohort();
  const auto samples = gen_risk_samples(cohort);
  ASSERT_GT(samples.size(), 100u);
  for (const auto& s : samples) {
    const auto it = std::find_if(cohort.begin(), cohort.end(),
                                 [&](const PatientHistory& h) { return h.record.patient_id == s.patient_id; });
    ASSERT_NE(it, cohort.end());
    EXPECT_GE(s.anchor, 13);
    EXPECT_EQ((s.anchor - 13) % 7, 0);
    EXPECT_LE(s.anchor + 7, it->calendar.size() - 2);
    const RiskPoint rp = screen_risk_point(it->timeline, it->calendar, s.anchor);
    EXPECT_TRUE(rp.eligible);
    EXPECT_EQ(s.label, rp.label);
    EXPECT_EQ(s.transition_day, rp.transition_day);
    EXPECT_LE(std::count(s.manual_seq.begin(), s.manual_seq.end(), 1), 2);
    EXPECT_GE(std::count(s.call_seq.begin(), s.call_seq.end(), 0), 1);
  }
}

TEST(OutcomeSamples, LabelsAndExclusions) {
  const std::string base(36, '1');
  auto s = gen_outcome_samples({history_from(base, "A", Outcome::Died), history_from(base, "B", Outcome::Cured)});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].label, 1);
  EXPECT_EQ(s[1].label, 0);
  EXPECT_EQ(s[0].anchor, 34);
  EXPECT_EQ(s[0].k(), 35);
  EXPECT_TRUE(gen_outcome_samples({history_from(std::string(35, '1'), "A", Outcome::Died)}).empty());
  EXPECT_TRUE(gen_outcome_samples({history_from(base, "A", Outcome::Ongoing)}).empty());
  EXPECT_TRUE(gen_outcome_samples({history_from(std::string(18, 'm') + std::string(18, '1'))}).empty());
  EXPECT_EQ(gen_outcome_samples({history_from(std::string(17, 'm') + std::string(19, '1'))}).size(), 1u);
}

TEST(LcfoSamples, LabelBoundary) {
  auto one = [](const std::string& days, Outcome o = Outcome::Cured) {
    const auto s = gen_lcfo_samples({history_from(days, "A", o)});
    return s.empty() ? -1 : s[0].label;
  };
  EXPECT_EQ(one("1111111" "1mmmmmm"), 1);  // 1 call in 7 days
  EXPECT_EQ(one("1111111" "11mmmmm"), 0);  // 2 of 7 is over a quarter
  EXPECT_EQ(one("1111111" "0000000"), 1);
  EXPECT_EQ(one("1111111" "0000000", Outcome::LostToFollowUp), 0);
  EXPECT_EQ(one("1111111" "000000"), -1);
  EXPECT_EQ(one("1111111" "0000000", Outcome::Ongoing), -1);
}

TEST(PlanSamples, CoefficientsAndAnchors) {
  const auto samples = gen_plan_samples(sim_cohort());
  ASSERT_FALSE(samples.empty());
  for (const auto& s : samples) {
    ASSERT_EQ(s.coef.size(), 7u);
    EXPECT_EQ(s.label, s.coef[0]);
    EXPECT_EQ((s.anchor - 13) % 7, 0);
  }
}

TEST(Samples, CsvRoundTrip) {
  auto samples = gen_risk_samples(sim_cohort());
  const auto plan = gen_plan_samples(sim_cohort());
  samples.insert(samples.end(), plan.begin(), plan.begin() + 50);
  const auto file = std::filesystem::temp_directory_path() / "adh_samples.csv";
  write_samples(file, samples);
  EXPECT_EQ(read_samples(file), samples);
  std::filesystem::remove(file);
  EXPECT_THROW(read_samples(file), Error);
}

TEST(Split, PatientLevelDisjointAndReproducible) {
  const auto samples = gen_risk_samples(sim_cohort());
  const Split a = split(samples, 0.25, 7);
  const Split b = split(samples, 0.25, 7);
  EXPECT_EQ(a.test_patients, b.test_patients);
  EXPECT_EQ(a.train.size() + a.test.size(), samples.size());
  std::set<std::string> train_ids, test_ids;
  for (const auto& s : a.train) train_ids.insert(s.patient_id);
  for (const auto& s : a.test) test_ids.insert(s.patient_id);
  for (const auto& id : test_ids) EXPECT_FALSE(train_ids.count(id));
  const double frac = static_cast<double>(test_ids.size()) / (train_ids.size() + test_ids.size());
  EXPECT_NEAR(frac, 0.25, 0.01);
  EXPECT_NE(split(samples, 0.25, 8).test_patients, a.test_patients);
  EXPECT_THROW(split({}, 0.25, 1), InvalidInput);
  EXPECT_THROW(split(samples, 1.5, 1), InvalidInput);
}

TEST(Contamination, ScreeningAvoidsVisitsUnderProxyPolicy) {
  sim::SimConfig c;
  c.n_patients = 400;
  c.seed = 12;
  c.policy.house_visit_budget = 6;
  const auto s = sim::simulate_cohort(c);
  const Cohort cohort = sim::to_cohort(s);
  EXPECT_TRUE(contamination_violations(gen_risk_samples(cohort), cohort, s.ledger).empty());

  c.policy.mode = sim::PolicyMode::Adversarial;
  const auto adv = sim::simulate_cohort(c);
  const Cohort adv_cohort = sim::to_cohort(adv);
  EXPECT_FALSE(contamination_violations(gen_risk_samples(adv_cohort), adv_cohort, adv.ledger).empty());
}

TEST(InputSample, BoundsChecked) {
  const auto h = history_from("11111110111111");
  EXPECT_EQ(input_sample(h, Task::Risk, 7).call_seq, (std::vector<int>{1, 1, 1, 1, 1, 1, 0}));
  EXPECT_THROW(input_sample(h, Task::Risk, 5), OutOfRange);
  EXPECT_THROW(input_sample(h, Task::Risk, 14), OutOfRange);
}
