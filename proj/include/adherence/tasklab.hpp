#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adherence/cohort.hpp"
#include "adherence/simkit.hpp"

namespace adherence::tasks {

enum class Task : std::uint8_t { Risk, Outcome, Lcfo, Plan };

std::string_view to_string(Task t);
Task parse_task(std::string_view text);

/// One labeled prediction point. The input window is days
/// [anchor - k + 1, anchor]; all day indices are relative to enrollment.
struct TaskSample {
  Task task = Task::Risk;
  std::string patient_id;
  int anchor = 0;
  int label = 0;
  std::vector<int> call_seq;      // 1 = dose taken (call or manual), 0 = missed
  std::vector<int> cum_miss_seq;  // lifetime misses through each input day
  std::vector<int> manual_seq;    // 1 = TakenManual
  std::vector<double> features;   // raw static features, scaled later
  std::string location;           // tb_unit_id
  std::optional<int> transition_day;  // risk positives
  int doses_before_transition = 0;    // misses strictly inside (anchor, transition_day)
  std::vector<int> coef;              // plan samples: true c_j1..c_j7

  int k() const { return static_cast<int>(call_seq.size()); }
  bool operator==(const TaskSample&) const = default;
};

/// Weekly risk points: anchors 13, 20, 27, ... (non-overlapping 7-day input
/// windows after the first week) whose 7-day label window ends before the
/// final treatment day. Kept when MEDIUM at the anchor, at most 2 manual
/// doses and at least 1 miss in the input window.
std::vector<TaskSample> gen_risk_samples(const Cohort& cohort);

/// One sample per terminal patient over days [0, k-1]; label 1 = unfavorable.
/// Excludes patients present for fewer than k+1 days or with more than k/2
/// manual doses in the input window.
std::vector<TaskSample> gen_outcome_samples(const Cohort& cohort, int k = 35);

/// One sample per terminal patient with at least k+7 days. Label 1 iff the
/// outcome is favorable and calls cover fewer than 25% of days k..end.
std::vector<TaskSample> gen_lcfo_samples(const Cohort& cohort, int k = 7);

/// Week-start points for the planning task at every risk anchor with a full
/// 7-day follow-up, without filters; `coef` holds the true success row.
std::vector<TaskSample> gen_plan_samples(const Cohort& cohort);

std::vector<TaskSample> generate(Task task, const Cohort& cohort);

/// Unlabeled sample over input days [anchor - k + 1, anchor]; used for
/// scoring live patients. Throws OutOfRange outside the calendar.
TaskSample input_sample(const PatientHistory& patient, Task task, int anchor, int k = 7);

/// Lifetime misses through each day of [first, last].
std::vector<int> cumulative_misses(const AdherenceCalendar& calendar, int first, int last);

struct Split {
  std::vector<std::string> test_patients;  // sorted
  std::vector<TaskSample> train;
  std::vector<TaskSample> test;
};

/// Patient-level split: round(test_frac * #patients) patients go to test.
std::vector<std::string> choose_test_patients(std::vector<std::string> patient_ids, double test_frac,
                                              std::uint64_t seed);
Split split(const std::vector<TaskSample>& samples, double test_frac, std::uint64_t seed);
Split split_by(const std::vector<TaskSample>& samples, const std::vector<std::string>& test_patients);

void write_samples(const std::filesystem::path& file, const std::vector<TaskSample>& samples);
std::vector<TaskSample> read_samples(const std::filesystem::path& file);

/// Risk samples whose label interval (anchor, label_day] contains a house
/// visit in the ledger. Zero is the screening guarantee.
std::vector<std::size_t> contamination_violations(const std::vector<TaskSample>& samples,
                                                  const Cohort& cohort,
                                                  const sim::InterventionLedger& ledger);

}  // namespace adherence::tasks
