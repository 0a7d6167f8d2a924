#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "adherence/simkit.hpp"

using namespace adherence;
using namespace adherence::sim;

namespace {

SimConfig small(int n = 200, std::uint64_t seed = 4) {
  SimConfig c;
  c.n_patients = n;
  c.seed = seed;
  return c;
}

std::size_t house_visits(const SimulatedCohort& s) {
  return std::count_if(s.ledger.events.begin(), s.ledger.events.end(),
                       [](const InterventionEvent& e) { return e.kind == InterventionKind::HouseVisit; });
}

}  // namespace

TEST(Simulate, DeterministicBySeed) {
  const auto a = simulate_cohort(small());
  const auto b = simulate_cohort(small());
  EXPECT_EQ(a.patients, b.patients);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.ledger, b.ledger);
  EXPECT_EQ(a.notes, b.notes);
  const auto c = simulate_cohort(small(200, 5));
  EXPECT_NE(a.events, c.events);
}

TEST(Simulate, ValidatesConfig) {
  SimConfig c = small();
  c.n_patients = 0;
  EXPECT_THROW(simulate_cohort(c), InvalidInput);
  c = small();
  c.mix.steady = 0.9;
  EXPECT_THROW(simulate_cohort(c), InvalidInput);
  c = small();
  c.behavior.steady_call_prob = 1.5;
  EXPECT_THROW(simulate_cohort(c), InvalidInput);
  c = small();
  c.policy.house_visit_budget = -1;
  EXPECT_THROW(simulate_cohort(c), InvalidInput);
}

TEST(Simulate, ZeroBudgetMeansNoHouseVisits) {
  SimConfig c = small(300);
  c.policy.house_visit_budget = 0;
  EXPECT_EQ(house_visits(simulate_cohort(c)), 0u);
  EXPECT_GT(house_visits(simulate_cohort(small(300))), 0u);
}

TEST(Simulate, SteadyMissRateMatchesBinomialExpectation) {
  SimConfig c = small(150);
  c.mix = {1.0, 0.0, 0.0, 0.0};
  c.behavior.steady_call_prob = 0.99;
  c.behavior.consume_without_call_prob = 0.0;
  c.behavior.caller_manual_prob = 0.0;
  c.outcome.hazard_base = 0.0;
  c.outcome.hazard_per_miss_rate = 0.0;
  const Cohort cohort = to_cohort(simulate_cohort(c));
  double misses = 0;
  for (const auto& h : cohort) misses += h.calendar.count(DayStatus::Missed);
  const double mean = misses / cohort.size();
  EXPECT_NEAR(mean, 1.8, 0.5);
}

TEST(Simulate, ProxyRespectingVisitsOnlyHighPatients) {
  const auto s = simulate_cohort(small(400));
  std::map<std::string, std::size_t> index;
  for (std::size_t p = 0; p < s.patients.size(); ++p) index[s.patients[p].patient_id] = p;
  std::size_t checked = 0;
  for (const auto& e : s.ledger.events) {
    if (e.kind != InterventionKind::HouseVisit) continue;
    const std::size_t p = index.at(e.patient_id);
    const int day = e.date - s.patients[p].enrollment_date;
    ASSERT_GE(day, 1);
    EXPECT_EQ(s.realtime_attention[p].at(day - 1), AttentionLevel::High);
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(Simulate, AdversarialVisitsMediumPatients) {
  SimConfig c = small(1000);
  c.policy.mode = PolicyMode::Adversarial;
  const auto s = simulate_cohort(c);
  std::map<std::string, std::size_t> index;
  for (std::size_t p = 0; p < s.patients.size(); ++p) index[s.patients[p].patient_id] = p;
  std::size_t medium = 0;
  for (const auto& e : s.ledger.events) {
    if (e.kind != InterventionKind::HouseVisit) continue;
    const std::size_t p = index.at(e.patient_id);
    const int day = e.date - s.patients[p].enrollment_date;
    medium += s.realtime_attention[p].at(day - 1) == AttentionLevel::Medium;
  }
  EXPECT_GT(medium, 0u);
}

TEST(Simulate, PolicyModeLockedAfterRun) {
  Simulator sim(small(20));
  sim.set_policy_mode(PolicyMode::Adversarial);
  sim.run();
  EXPECT_THROW(sim.set_policy_mode(PolicyMode::ProxyRespecting), Error);
}

TEST(Simulate, HouseVisitsRaiseDeclinerCallRate) {
  SimConfig c = small(1500, 8);
  c.mix = {0.0, 1.0, 0.0, 0.0};
  const auto s = simulate_cohort(c);
  const Cohort cohort = to_cohort(s);
  const int D = c.policy.visit_duration_days;
  double before = 0, after = 0;
  int n = 0;
  std::set<std::string> seen;
  for (const auto& e : s.ledger.events) {
    if (e.kind != InterventionKind::HouseVisit || !seen.insert(e.patient_id).second) continue;
    const auto it = std::find_if(cohort.begin(), cohort.end(),
                                 [&](const PatientHistory& h) { return h.record.patient_id == e.patient_id; });
    const int v = e.date - it->calendar.start_date();
    if (v - D < 0 || v + D > it->calendar.size()) continue;
    int b = 0, a = 0;
    for (int d = v - D; d < v; ++d) b += it->calendar.status(d) == DayStatus::TakenCall;
    for (int d = v; d < v + D; ++d) a += it->calendar.status(d) == DayStatus::TakenCall;
    before += static_cast<double>(b) / D;
    after += static_cast<double>(a) / D;
    ++n;
  }
  ASSERT_GT(n, 20);
  EXPECT_GT(after / n, before / n + 0.05);
}

TEST(LedgerEvents, HalfOpenRangeMatchesBruteForce) {
  const auto s = simulate_cohort(small(100));
  EXPECT_TRUE(ledger_events(InterventionLedger{}, "P00001", Date(0), Date(100000), InterventionKind::Sms).empty());
  std::size_t total = 0;
  for (const auto& e : s.ledger.events) total += e.kind == InterventionKind::HouseVisit;
  std::size_t by_patient = 0;
  for (const auto& p : s.patients) {
    by_patient += ledger_events(s.ledger, p.patient_id, Date(0), Date(100000), InterventionKind::HouseVisit).size();
    const Date lo = p.enrollment_date + 20, hi = p.enrollment_date + 40;
    std::vector<InterventionEvent> expect;
    for (const auto& e : s.ledger.events) {
      if (e.patient_id == p.patient_id && e.kind == InterventionKind::Sms && e.date > lo && e.date <= hi) {
        expect.push_back(e);
      }
    }
    EXPECT_EQ(ledger_events(s.ledger, p.patient_id, lo, hi, InterventionKind::Sms), expect);
  }
  EXPECT_EQ(by_patient, total);
}

TEST(Export, WritesFilesAndPhoneMapCoversCallers) {
  SimConfig c = small(60);
  c.shared_phone_pairs = 3;
  const auto s = simulate_cohort(c);
  const auto dir = std::filesystem::temp_directory_path() / "adh_sim_export";
  std::filesystem::remove_all(dir);
  const auto files = export_dataset(s, dir);
  EXPECT_EQ(files.size(), 5u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
  std::map<std::string, std::set<std::string>> phones_of, owners;
  for (const auto& r : s.phone_map) {
    phones_of[r.patient_id].insert(r.phone);
    owners[r.phone].insert(r.patient_id);
  }
  for (const auto& e : s.events) {
    if (e.kind == DoseKind::Call) {
      EXPECT_FALSE(phones_of[e.patient_id].empty());
    }
  }
  const auto shared = std::count_if(owners.begin(), owners.end(), [](const auto& kv) { return kv.second.size() == 2; });
  EXPECT_EQ(shared, 3);
  EXPECT_EQ(load_ledger(dir / "ledger.csv"), s.ledger);
}
