#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adherence/attention.hpp"
#include "adherence/cohort.hpp"
#include "adherence/core.hpp"

namespace adherence::sim {

enum class Archetype : std::uint8_t { Steady, Decliner, Sporadic, NonCallerAdherent };
enum class PolicyMode : std::uint8_t { ProxyRespecting, Adversarial };
enum class InterventionKind : std::uint8_t { Sms, PhoneCall, HouseVisit };

std::string_view to_string(Archetype a);
std::string_view to_string(PolicyMode m);
std::string_view to_string(InterventionKind k);
InterventionKind parse_intervention_kind(std::string_view text);
PolicyMode parse_policy_mode(std::string_view text);

struct ArchetypeMix {
  double steady = 0.45;
  double decliner = 0.20;
  double sporadic = 0.20;
  double non_caller = 0.15;
};

/// Patient-side generative parameters. All probabilities are per day.
struct BehaviorParams {
  double steady_call_prob = 0.95;

  double decliner_high_prob = 0.93;
  double decliner_low_prob = 0.20;
  int decliner_ramp_days = 14;
  double decliner_onset_min_frac = 0.15;  // onset drawn uniformly in this fraction of treatment
  double decliner_onset_max_frac = 0.85;

  // Two-state (good/bad) Markov chain per sporadic patient.
  double sporadic_good_prob_min = 0.80;
  double sporadic_good_prob_max = 0.97;
  double sporadic_bad_prob_min = 0.15;
  double sporadic_bad_prob_max = 0.45;
  double sporadic_to_bad = 0.07;
  double sporadic_to_good = 0.20;

  double non_caller_consume_prob = 0.95;
  double non_caller_call_prob = 0.08;
  double non_caller_onboarding_manual_prob = 0.95;
  double non_caller_manual_prob = 0.30;
  int onboarding_days = 7;

  double consume_without_call_prob = 0.30;
  double caller_manual_prob = 0.03;  // worker marks a consumed but uncalled dose

  double backlog_prob = 0.40;  // extra calls on the first call day after misses
  double duplicate_call_prob = 0.03;

  double preferred_hour_mean = 10.0;
  double preferred_hour_sd = 2.5;
  double steady_jitter_minutes = 25.0;
  double sporadic_jitter_minutes = 150.0;
  double decliner_late_jitter_minutes = 180.0;
  int decliner_jitter_lead_days = 14;  // jitter ramps up over this many days before onset

  double second_phone_prob = 0.30;
};

/// Health-worker policy. Interventions decided at the end of day d take
/// effect (and are dated) on day d + 1.
struct PolicyParams {
  PolicyMode mode = PolicyMode::ProxyRespecting;
  int house_visit_budget = 2;  // per worker (TB unit) per day
  double visit_boost = 0.35;
  int visit_duration_days = 10;
  double sms_boost = 0.05;
  int sms_duration_days = 2;
  double phone_boost = 0.15;
  int phone_duration_days = 3;
  int sms_at_misses = 1;
  int phone_min_misses = 2;
  int phone_max_misses = 3;
  double adversarial_visit_prob = 0.05;  // per MEDIUM patient with a recent miss, per day
};

struct OutcomeParams {
  double favorable_min_consumed = 0.80;
  double hazard_base = 0.0001;
  double hazard_per_miss_rate = 0.003;  // scaled by the trailing 14-day miss fraction
  double died_share = 0.30;             // remainder of hazard exits are LostToFollowUp
};

struct SimConfig {
  int n_patients = 1000;
  ArchetypeMix mix;
  BehaviorParams behavior;
  PolicyParams policy;
  OutcomeParams outcome;
  AttentionRules rules;
  int n_centers = 20;
  int n_tb_units = 8;
  int length_min_days = 180;
  int length_max_days = 180;
  Date start_date = Date::from_ymd(2017, 2, 1);
  int enrollment_window_days = 120;
  std::optional<Date> study_end;  // patients still in treatment then are Ongoing
  int shared_phone_pairs = 0;     // injected phones registered to two patients
  int stray_calls = 0;            // calls from phones registered to nobody
  std::uint64_t seed = 1;

  void validate() const;
};

struct InterventionEvent {
  std::string patient_id;
  Date date;
  InterventionKind kind = InterventionKind::Sms;
  bool operator==(const InterventionEvent&) const = default;
};

/// Ground truth of interventions, hidden from everything except validation.
struct InterventionLedger {
  std::vector<InterventionEvent> events;  // chronological
  bool operator==(const InterventionLedger&) const = default;
};

/// Events with `after < date <= through` (half-open on the left).
std::vector<InterventionEvent> ledger_events(const InterventionLedger& ledger,
                                             std::string_view patient_id, Date after, Date through,
                                             InterventionKind kind);

struct PhoneRegistration {
  std::string phone;
  std::string patient_id;
  bool operator==(const PhoneRegistration&) const = default;
};

struct SimulatedCohort {
  SimConfig config;
  std::vector<PatientRecord> patients;
  std::vector<Archetype> archetypes;  // parallel to patients
  std::vector<DoseEvent> events;
  std::vector<DoseEvent> stray_calls;  // patient_id empty
  std::vector<PhoneRegistration> phone_map;
  std::vector<WorkerNote> notes;
  InterventionLedger ledger;
  std::vector<AttentionTimeline> realtime_attention;  // what the policy saw, per patient
};

class Simulator {
 public:
  explicit Simulator(SimConfig config);

  /// Allowed only before run().
  void set_policy_mode(PolicyMode mode);
  SimulatedCohort run();

  const SimConfig& config() const { return config_; }

 private:
  SimConfig config_;
  bool ran_ = false;
};

SimulatedCohort simulate_cohort(const SimConfig& config);

/// Calendars built straight from the simulator's own events.
Cohort to_cohort(const SimulatedCohort& sim);

/// Writes patients.csv, call_log.csv, phone_map.csv, patient_log.csv, ledger.csv.
std::vector<std::filesystem::path> export_dataset(const SimulatedCohort& sim,
                                                  const std::filesystem::path& dir);

InterventionLedger load_ledger(const std::filesystem::path& file);

}  // namespace adherence::sim
