#include "adherence/tasklab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include "adherence/csv.hpp"
#include "adherence/featurize.hpp"
#include "adherence/plan.hpp"

namespace adherence::tasks {

namespace {

constexpr int kRiskWindow = 7;
constexpr int kFirstAnchor = 13;  // input window [7, 13]

int count_in(const AdherenceCalendar& cal, int first, int last, DayStatus s) {
  int n = 0;
  for (int d = first; d <= last; ++d) n += cal.status(d) == s ? 1 : 0;
  return n;
}

TaskSample make_sample(const PatientHistory& h, Task task, int anchor, int k) {
  const AdherenceCalendar& cal = h.calendar;
  const int first = anchor - k + 1;
  TaskSample s;
  s.task = task;
  s.patient_id = h.record.patient_id;
  s.anchor = anchor;
  s.location = h.record.tb_unit_id;
  s.cum_miss_seq = cumulative_misses(cal, first, anchor);
  for (int d = first; d <= anchor; ++d) {
    const DayStatus st = cal.status(d);
    s.call_seq.push_back(st == DayStatus::Missed ? 0 : 1);
    s.manual_seq.push_back(st == DayStatus::TakenManual ? 1 : 0);
  }
  s.features = features::static_features(cal, h.record, first, anchor);
  return s;
}

std::string bits(const std::vector<int>& v) {
  std::string out;
  for (int b : v) out.push_back(b ? '1' : '0');
  return out;
}

std::vector<int> parse_bits(const std::string& s) {
  std::vector<int> out;
  for (char c : s) {
    if (c != '0' && c != '1') throw InvalidInput("bad bit string '" + s + "'");
    out.push_back(c - '0');
  }
  return out;
}

std::string ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(';');
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t next = s.find(';', pos);
    out.push_back(std::stoi(s.substr(pos, next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

csv::Row samples_header() {
  csv::Row h{"task",     "patient_id", "anchor",         "label",
             "call_seq", "cum_miss_seq", "manual_seq", "location",
             "transition_day", "doses_before_transition", "coef"};
  for (const auto& f : features::FeatureSchema::v1().features) h.push_back("v1:" + f.name);
  return h;
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Risk: return "risk";
    case Task::Outcome: return "outcome";
    case Task::Lcfo: return "lcfo";
    case Task::Plan: return "plan";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  for (Task t : {Task::Risk, Task::Outcome, Task::Lcfo, Task::Plan}) {
    if (text == to_string(t)) return t;
  }
  throw InvalidInput("unknown task '" + std::string(text) + "'");
}

std::vector<int> cumulative_misses(const AdherenceCalendar& calendar, int first, int last) {
  int running = first > 0 ? count_in(calendar, 0, first - 1, DayStatus::Missed) : 0;
  std::vector<int> out;
  for (int d = first; d <= last; ++d) {
    running += calendar.status(d) == DayStatus::Missed ? 1 : 0;
    out.push_back(running);
  }
  return out;
}

TaskSample input_sample(const PatientHistory& patient, Task task, int anchor, int k) {
  if (k < 1 || anchor - k + 1 < 0 || anchor >= patient.calendar.size()) {
    throw OutOfRange("input window [" + std::to_string(anchor - k + 1) + ", " + std::to_string(anchor) +
                     "] is outside the calendar of " + patient.record.patient_id);
  }
  return make_sample(patient, task, anchor, k);
}

std::vector<TaskSample> gen_risk_samples(const Cohort& cohort) {
  std::vector<TaskSample> out;
  for (const PatientHistory& h : cohort) {
    const AdherenceCalendar& cal = h.calendar;
    const int n = cal.size();
    // The label window must stop before the last treatment day.
    for (int t = kFirstAnchor; t + kRiskWindow <= n - 2; t += kRiskWindow) {
      const RiskPoint rp = screen_risk_point(h.timeline, cal, t);
      if (!rp.eligible) continue;
      const int first = t - kRiskWindow + 1;
      if (count_in(cal, first, t, DayStatus::TakenManual) > 2) continue;
      if (count_in(cal, first, t, DayStatus::Missed) == 0) continue;
      TaskSample s = make_sample(h, Task::Risk, t, kRiskWindow);
      s.label = rp.label;
      s.transition_day = rp.transition_day;
      if (rp.transition_day) {
        s.doses_before_transition = count_in(cal, t + 1, *rp.transition_day - 1, DayStatus::Missed);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<TaskSample> gen_outcome_samples(const Cohort& cohort, int k) {
  if (k < 1) throw InvalidInput("outcome window must be positive");
  std::vector<TaskSample> out;
  for (const PatientHistory& h : cohort) {
    if (!is_terminal(h.record.outcome)) continue;
    if (h.calendar.size() < k + 1) continue;
    if (2 * count_in(h.calendar, 0, k - 1, DayStatus::TakenManual) > k) continue;
    TaskSample s = make_sample(h, Task::Outcome, k - 1, k);
    s.label = is_unfavorable(h.record.outcome) ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaskSample> gen_lcfo_samples(const Cohort& cohort, int k) {
  if (k < 1) throw InvalidInput("LCFO window must be positive");
  std::vector<TaskSample> out;
  for (const PatientHistory& h : cohort) {
    if (!is_terminal(h.record.outcome)) continue;
    const int n = h.calendar.size();
    if (n < k + 7) continue;
    const int calls = count_in(h.calendar, k, n - 1, DayStatus::TakenCall);
    TaskSample s = make_sample(h, Task::Lcfo, k - 1, k);
    s.label = is_favorable(h.record.outcome) && 4 * calls < (n - k) ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaskSample> gen_plan_samples(const Cohort& cohort) {
  std::vector<TaskSample> out;
  for (const PatientHistory& h : cohort) {
    const int n = h.calendar.size();
    for (int t = kFirstAnchor; t + plan::kDays <= n - 1; t += kRiskWindow) {
      TaskSample s = make_sample(h, Task::Plan, t, kRiskWindow);
      const plan::CoefRow row = plan::true_coefficient_row(h, t);
      for (double c : row) s.coef.push_back(c > 0.5 ? 1 : 0);
      s.label = s.coef[0];
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<TaskSample> generate(Task task, const Cohort& cohort) {
  switch (task) {
    case Task::Risk: return gen_risk_samples(cohort);
    case Task::Outcome: return gen_outcome_samples(cohort);
    case Task::Lcfo: return gen_lcfo_samples(cohort);
    case Task::Plan: return gen_plan_samples(cohort);
  }
  return {};
}

std::vector<std::string> choose_test_patients(std::vector<std::string> patient_ids, double test_frac,
                                              std::uint64_t seed) {
  if (patient_ids.empty()) throw InvalidInput("cannot split an empty sample set");
  if (test_frac < 0.0 || test_frac > 1.0) throw InvalidInput("test fraction outside [0, 1]");
  std::sort(patient_ids.begin(), patient_ids.end());
  patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()), patient_ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(patient_ids.begin(), patient_ids.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::lround(test_frac * patient_ids.size()));
  patient_ids.resize(n_test);
  std::sort(patient_ids.begin(), patient_ids.end());
  return patient_ids;
}

Split split_by(const std::vector<TaskSample>& samples, const std::vector<std::string>& test_patients) {
  Split out;
  out.test_patients = test_patients;
  std::sort(out.test_patients.begin(), out.test_patients.end());
  for (const TaskSample& s : samples) {
    const bool test =
        std::binary_search(out.test_patients.begin(), out.test_patients.end(), s.patient_id);
    (test ? out.test : out.train).push_back(s);
  }
  return out;
}

Split split(const std::vector<TaskSample>& samples, double test_frac, std::uint64_t seed) {
  if (samples.empty()) throw InvalidInput("cannot split an empty sample set");
  std::vector<std::string> ids;
  for (const TaskSample& s : samples) ids.push_back(s.patient_id);
  return split_by(samples, choose_test_patients(std::move(ids), test_frac, seed));
}

void write_samples(const std::filesystem::path& file, const std::vector<TaskSample>& samples) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  csv::write_row(out, samples_header());
  for (const TaskSample& s : samples) {
    csv::Row row{std::string(to_string(s.task)),
                 s.patient_id,
                 std::to_string(s.anchor),
                 std::to_string(s.label),
                 bits(s.call_seq),
                 ints(s.cum_miss_seq),
                 bits(s.manual_seq),
                 s.location,
                 s.transition_day ? std::to_string(*s.transition_day) : "",
                 std::to_string(s.doses_before_transition),
                 bits(s.coef)};
    for (double f : s.features) row.push_back(exact(f));
    csv::write_row(out, row);
  }
  if (!out) throw Error("write failed for " + file.string());
}

std::vector<TaskSample> read_samples(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw Error("missing samples file " + file.string());
  const csv::Table t = csv::read_file(file);
  if (t.header != samples_header()) {
    throw InvalidInput("samples.csv header does not match feature schema v1");
  }
  std::vector<TaskSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const csv::Row& row = t.rows[r];
    if (row.size() != t.header.size()) {
      throw InvalidInput("samples.csv line " + std::to_string(t.line_numbers[r]) +
                         " has the wrong field count");
    }
    TaskSample s;
    s.task = parse_task(row[0]);
    s.patient_id = row[1];
    s.anchor = std::stoi(row[2]);
    s.label = std::stoi(row[3]);
    s.call_seq = parse_bits(row[4]);
    s.cum_miss_seq = parse_ints(row[5]);
    s.manual_seq = parse_bits(row[6]);
    s.location = row[7];
    if (!row[8].empty()) s.transition_day = std::stoi(row[8]);
    s.doses_before_transition = std::stoi(row[9]);
    s.coef = parse_bits(row[10]);
    for (std::size_t c = 11; c < row.size(); ++c) s.features.push_back(std::stod(row[c]));
    if (s.cum_miss_seq.size() != s.call_seq.size() || s.manual_seq.size() != s.call_seq.size()) {
      throw InvalidInput("samples.csv line " + std::to_string(t.line_numbers[r]) +
                         " has sequences of different lengths");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> contamination_violations(const std::vector<TaskSample>& samples,
                                                  const Cohort& cohort,
                                                  const sim::InterventionLedger& ledger) {
  std::unordered_map<std::string, Date> start;
  for (const PatientHistory& h : cohort) start.emplace(h.record.patient_id, h.calendar.start_date());
  std::unordered_map<std::string, std::vector<Date>> visits;
  for (const sim::InterventionEvent& e : ledger.events) {
    if (e.kind == sim::InterventionKind::HouseVisit) visits[e.patient_id].push_back(e.date);
  }
  for (auto& [pid, dates] : visits) std::sort(dates.begin(), dates.end());

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TaskSample& s = samples[i];
    if (s.task != Task::Risk) continue;
    const auto st = start.find(s.patient_id);
    const auto vs = visits.find(s.patient_id);
    if (st == start.end() || vs == visits.end()) continue;
    const Date after = st->second + s.anchor;
    const Date through = st->second + s.transition_day.value_or(s.anchor + kRiskWindow);
    const auto it = std::upper_bound(vs->second.begin(), vs->second.end(), after);
    if (it != vs->second.end() && *it <= through) out.push_back(i);
  }
  return out;
}

}  // namespace adherence::tasks
