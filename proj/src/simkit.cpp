#include "adherence/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "adherence/csv.hpp"

namespace adherence::sim {

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::Steady: return "steady";
    case Archetype::Decliner: return "decliner";
    case Archetype::Sporadic: return "sporadic";
    case Archetype::NonCallerAdherent: return "non_caller_adherent";
  }
  return "steady";
}

std::string_view to_string(PolicyMode m) {
  return m == PolicyMode::Adversarial ? "adversarial" : "proxy_respecting";
}

std::string_view to_string(InterventionKind k) {
  switch (k) {
    case InterventionKind::Sms: return "sms";
    case InterventionKind::PhoneCall: return "phone_call";
    case InterventionKind::HouseVisit: return "house_visit";
  }
  return "sms";
}

InterventionKind parse_intervention_kind(std::string_view text) {
  for (auto k : {InterventionKind::Sms, InterventionKind::PhoneCall, InterventionKind::HouseVisit}) {
    if (text == to_string(k)) return k;
  }
  throw InvalidInput("unknown intervention kind '" + std::string(text) + "'");
}

PolicyMode parse_policy_mode(std::string_view text) {
  if (text == "proxy_respecting") return PolicyMode::ProxyRespecting;
  if (text == "adversarial") return PolicyMode::Adversarial;
  throw InvalidInput("unknown policy mode '" + std::string(text) + "'");
}

namespace {

void require_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidInput(std::string("probability ") + name + " must lie in [0, 1]");
  }
}

}  // namespace

void SimConfig::validate() const {
  if (n_patients <= 0) throw InvalidInput("simulation needs at least one patient");
  const double mix_sum = mix.steady + mix.decliner + mix.sporadic + mix.non_caller;
  if (mix.steady < 0 || mix.decliner < 0 || mix.sporadic < 0 || mix.non_caller < 0 ||
      std::abs(mix_sum - 1.0) > 1e-9) {
    throw InvalidInput("archetype mixture weights must be non-negative and sum to 1");
  }
  const BehaviorParams& b = behavior;
  for (auto [p, name] : std::initializer_list<std::pair<double, const char*>>{
           {b.steady_call_prob, "steady_call_prob"},
           {b.decliner_high_prob, "decliner_high_prob"},
           {b.decliner_low_prob, "decliner_low_prob"},
           {b.decliner_onset_min_frac, "decliner_onset_min_frac"},
           {b.decliner_onset_max_frac, "decliner_onset_max_frac"},
           {b.sporadic_good_prob_min, "sporadic_good_prob_min"},
           {b.sporadic_good_prob_max, "sporadic_good_prob_max"},
           {b.sporadic_bad_prob_min, "sporadic_bad_prob_min"},
           {b.sporadic_bad_prob_max, "sporadic_bad_prob_max"},
           {b.sporadic_to_bad, "sporadic_to_bad"},
           {b.sporadic_to_good, "sporadic_to_good"},
           {b.non_caller_consume_prob, "non_caller_consume_prob"},
           {b.non_caller_call_prob, "non_caller_call_prob"},
           {b.non_caller_onboarding_manual_prob, "non_caller_onboarding_manual_prob"},
           {b.non_caller_manual_prob, "non_caller_manual_prob"},
           {b.consume_without_call_prob, "consume_without_call_prob"},
           {b.caller_manual_prob, "caller_manual_prob"},
           {b.backlog_prob, "backlog_prob"},
           {b.duplicate_call_prob, "duplicate_call_prob"},
           {b.second_phone_prob, "second_phone_prob"},
           {policy.visit_boost, "visit_boost"},
           {policy.sms_boost, "sms_boost"},
           {policy.phone_boost, "phone_boost"},
           {policy.adversarial_visit_prob, "adversarial_visit_prob"},
           {outcome.favorable_min_consumed, "favorable_min_consumed"},
           {outcome.hazard_base, "hazard_base"},
           {outcome.hazard_per_miss_rate, "hazard_per_miss_rate"},
           {outcome.died_share, "died_share"}}) {
    require_prob(p, name);
  }
  if (b.decliner_onset_min_frac > b.decliner_onset_max_frac) {
    throw InvalidInput("decliner onset fraction range is inverted");
  }
  if (policy.house_visit_budget < 0) throw InvalidInput("house visit budget must be >= 0");
  if (n_centers <= 0 || n_tb_units <= 0) throw InvalidInput("need at least one center and unit");
  if (length_min_days < 2 || length_max_days < length_min_days) {
    throw InvalidInput("treatment length range must satisfy 2 <= min <= max");
  }
  if (enrollment_window_days < 0) throw InvalidInput("enrollment window must be >= 0");
  if (shared_phone_pairs < 0 || stray_calls < 0) throw InvalidInput("negative injection count");
  if (2 * shared_phone_pairs > n_patients) {
    throw InvalidInput("more shared-phone pairs than patients allow");
  }
  if (study_end && *study_end < start_date + enrollment_window_days) {
    throw InvalidInput("study_end must not precede the last enrollment date");
  }
}

std::vector<InterventionEvent> ledger_events(const InterventionLedger& ledger,
                                             std::string_view patient_id, Date after, Date through,
                                             InterventionKind kind) {
  std::vector<InterventionEvent> out;
  for (const InterventionEvent& e : ledger.events) {
    if (e.kind == kind && e.patient_id == patient_id && e.date > after && e.date <= through) {
      out.push_back(e);
    }
  }
  return out;
}

namespace {

struct Boost {
  int first_day;  // inclusive day index
  int last_day;   // inclusive
  double amount;
};

struct Live {
  Archetype archetype;
  Date enroll;
  int length = 0;  // planned days
  int observed_days = 0;
  bool exited = false;
  Outcome exit_outcome = Outcome::Ongoing;

  double preferred_minute = 600;
  double jitter = 30;
  int decline_onset = 0;
  double sporadic_good = 0.9;
  double sporadic_bad = 0.3;
  bool sporadic_in_bad = false;

  std::vector<std::string> phones;
  std::string shared_phone;  // non-empty for injected pairs' first member

  std::vector<Boost> boosts;
  std::vector<DayStatus> statuses;
  int consumed = 0;
  int days_since_call = 0;
  AttentionLevel level = AttentionLevel::Medium;
  std::vector<AttentionLevel> levels;
  std::optional<Date> last_note;
  int last_visit_day = -1'000'000;

  bool active_on(int day) const { return !exited && day >= 0 && day < length; }
  int misses_trailing(int day, int span) const {
    int n = 0;
    for (int d = std::max(0, day - span + 1); d <= day; ++d) {
      if (statuses[static_cast<std::size_t>(d)] == DayStatus::Missed) ++n;
    }
    return n;
  }
  double boost_on(int day) const {
    double b = 0.0;
    for (const Boost& x : boosts) {
      if (day >= x.first_day && day <= x.last_day) b += x.amount;
    }
    return b;
  }
};

class Engine {
 public:
  explicit Engine(const SimConfig& c) : cfg_(c), rng_(c.seed) {}

  SimulatedCohort run();

 private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool bernoulli(double p) { return uniform() < p; }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }

  std::string new_phone();
  std::string next_event_id() {
    char buf[16];
    std::snprintf(buf, sizeof buf, "E%08d", ++event_counter_);
    return buf;
  }
  std::string next_note_id() {
    char buf[16];
    std::snprintf(buf, sizeof buf, "N%08d", ++note_counter_);
    return buf;
  }

  void init_patients();
  double call_prob(Live& p, int day);
  double jitter_on(const Live& p, int day) const;
  void simulate_day(std::size_t i, Date today);
  void end_of_day(Date today);
  void finalize();

  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  std::set<std::string> used_phones_;
  int event_counter_ = 0;
  int note_counter_ = 0;
  std::vector<Live> live_;
  SimulatedCohort out_;
};

std::string Engine::new_phone() {
  for (;;) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "9%09d", uniform_int(0, 999'999'999));
    if (used_phones_.insert(buf).second) return buf;
  }
}

void Engine::init_patients() {
  const BehaviorParams& b = cfg_.behavior;
  const std::vector<double> weights{cfg_.mix.steady, cfg_.mix.decliner, cfg_.mix.sporadic,
                                    cfg_.mix.non_caller};
  std::discrete_distribution<int> pick_archetype(weights.begin(), weights.end());

  out_.patients.reserve(static_cast<std::size_t>(cfg_.n_patients));
  live_.resize(static_cast<std::size_t>(cfg_.n_patients));
  for (int i = 0; i < cfg_.n_patients; ++i) {
    Live& p = live_[static_cast<std::size_t>(i)];
    p.archetype = static_cast<Archetype>(pick_archetype(rng_));
    p.enroll = cfg_.start_date + uniform_int(0, cfg_.enrollment_window_days);
    p.length = uniform_int(cfg_.length_min_days, cfg_.length_max_days);
    const double hour = std::clamp(normal(b.preferred_hour_mean, b.preferred_hour_sd), 6.0, 21.0);
    p.preferred_minute = std::floor(hour) * 60.0 + uniform_int(0, 59);
    p.decline_onset = static_cast<int>(std::lround(
        p.length * (b.decliner_onset_min_frac +
                    uniform() * (b.decliner_onset_max_frac - b.decliner_onset_min_frac))));
    p.sporadic_good = b.sporadic_good_prob_min +
                      uniform() * (b.sporadic_good_prob_max - b.sporadic_good_prob_min);
    p.sporadic_bad =
        b.sporadic_bad_prob_min + uniform() * (b.sporadic_bad_prob_max - b.sporadic_bad_prob_min);
    p.phones.push_back(new_phone());
    if (bernoulli(b.second_phone_prob)) p.phones.push_back(new_phone());

    PatientRecord rec;
    char id[16];
    std::snprintf(id, sizeof id, "P%05d", i);
    rec.patient_id = id;
    rec.enrollment_date = p.enroll;
    rec.gender = static_cast<Gender>(uniform_int(0, 2));
    rec.age_band = uniform_int(0, kAgeBands - 1);
    rec.weight_band = uniform_int(0, kWeightBands - 1);
    const int unit = uniform_int(0, cfg_.n_tb_units - 1);
    const int center = uniform_int(0, cfg_.n_centers - 1);
    rec.tb_unit_id = "U" + std::to_string(unit);
    rec.center_id = "C" + std::to_string(center);
    out_.patients.push_back(std::move(rec));
    out_.archetypes.push_back(p.archetype);
    p.statuses.reserve(static_cast<std::size_t>(p.length));
  }

  // Shared phones: patient 2k and 2k+1 both register a new phone; the first
  // one places some of its calls from it.
  for (int k = 0; k < cfg_.shared_phone_pairs; ++k) {
    const std::string phone = new_phone();
    live_[static_cast<std::size_t>(2 * k)].shared_phone = phone;
    out_.phone_map.push_back({phone, out_.patients[static_cast<std::size_t>(2 * k)].patient_id});
    out_.phone_map.push_back(
        {phone, out_.patients[static_cast<std::size_t>(2 * k + 1)].patient_id});
  }
  for (std::size_t i = 0; i < live_.size(); ++i) {
    for (const std::string& phone : live_[i].phones) {
      out_.phone_map.push_back({phone, out_.patients[i].patient_id});
    }
  }
}

double Engine::call_prob(Live& p, int day) {
  const BehaviorParams& b = cfg_.behavior;
  double base = 0.0;
  switch (p.archetype) {
    case Archetype::Steady:
      base = b.steady_call_prob;
      break;
    case Archetype::Decliner: {
      if (day < p.decline_onset) {
        base = b.decliner_high_prob;
      } else if (day < p.decline_onset + b.decliner_ramp_days) {
        const double f = static_cast<double>(day - p.decline_onset + 1) / b.decliner_ramp_days;
        base = b.decliner_high_prob + f * (b.decliner_low_prob - b.decliner_high_prob);
      } else {
        base = b.decliner_low_prob;
      }
      break;
    }
    case Archetype::Sporadic:
      if (p.sporadic_in_bad) {
        if (bernoulli(b.sporadic_to_good)) p.sporadic_in_bad = false;
      } else if (bernoulli(b.sporadic_to_bad)) {
        p.sporadic_in_bad = true;
      }
      base = p.sporadic_in_bad ? p.sporadic_bad : p.sporadic_good;
      break;
    case Archetype::NonCallerAdherent:
      base = b.non_caller_call_prob;
      break;
  }
  return std::min(1.0, base + p.boost_on(day));
}

double Engine::jitter_on(const Live& p, int day) const {
  const BehaviorParams& b = cfg_.behavior;
  switch (p.archetype) {
    case Archetype::Steady:
    case Archetype::NonCallerAdherent:
      return b.steady_jitter_minutes;
    case Archetype::Sporadic:
      return b.sporadic_jitter_minutes;
    case Archetype::Decliner: {
      const int lead_start = p.decline_onset - b.decliner_jitter_lead_days;
      if (day < lead_start) return b.steady_jitter_minutes;
      const double f =
          std::min(1.0, static_cast<double>(day - lead_start) / std::max(1, b.decliner_jitter_lead_days));
      return b.steady_jitter_minutes + f * (b.decliner_late_jitter_minutes - b.steady_jitter_minutes);
    }
  }
  return b.steady_jitter_minutes;
}

void Engine::simulate_day(std::size_t i, Date today) {
  Live& p = live_[i];
  const int day = today - p.enroll;
  if (!p.active_on(day)) return;
  const BehaviorParams& b = cfg_.behavior;
  const OutcomeParams& o = cfg_.outcome;
  const std::string& pid = out_.patients[i].patient_id;

  if (day >= 1) {
    const int span = std::min(14, day);
    const double miss_rate = static_cast<double>(p.misses_trailing(day - 1, span)) / span;
    if (bernoulli(o.hazard_base + o.hazard_per_miss_rate * miss_rate)) {
      p.exited = true;
      p.exit_outcome = bernoulli(o.died_share) ? Outcome::Died : Outcome::LostToFollowUp;
      return;
    }
  }

  const double p_call = call_prob(p, day);
  bool called = false;
  bool consumed = false;
  if (p.archetype == Archetype::NonCallerAdherent) {
    consumed = bernoulli(b.non_caller_consume_prob);
    called = consumed && bernoulli(p_call);
  } else {
    called = bernoulli(p_call);
    consumed = called || bernoulli(b.consume_without_call_prob);
  }

  DayStatus status = DayStatus::Missed;
  if (called) {
    status = DayStatus::TakenCall;
    int n_calls = 1;
    if (p.days_since_call > 0 && bernoulli(b.backlog_prob)) n_calls += std::min(p.days_since_call, 3);
    if (bernoulli(b.duplicate_call_prob)) n_calls += 1;
    const double base_minute = p.preferred_minute + normal(0.0, jitter_on(p, day));
    for (int c = 0; c < n_calls; ++c) {
      const int minute =
          std::clamp(static_cast<int>(std::lround(base_minute)) + c * uniform_int(1, 5), 0, 1439);
      std::string phone;
      if (!p.shared_phone.empty() && bernoulli(0.5)) {
        phone = p.shared_phone;
      } else {
        phone = p.phones[static_cast<std::size_t>(uniform_int(0, static_cast<int>(p.phones.size()) - 1))];
      }
      DoseEvent e;
      e.event_id = next_event_id();
      e.patient_id = pid;
      e.dose_date = today;
      e.kind = DoseKind::Call;
      e.timestamp = Timestamp{today, minute};
      e.phone = std::move(phone);
      out_.events.push_back(std::move(e));
    }
  } else if (consumed) {
    double p_manual = b.caller_manual_prob;
    if (p.archetype == Archetype::NonCallerAdherent) {
      p_manual = day < b.onboarding_days ? b.non_caller_onboarding_manual_prob : b.non_caller_manual_prob;
    }
    if (bernoulli(p_manual)) {
      status = DayStatus::TakenManual;
      const std::string worker = "W" + out_.patients[i].tb_unit_id;
      const Timestamp ts{today, uniform_int(600, 1079)};
      DoseEvent e;
      e.event_id = next_event_id();
      e.patient_id = pid;
      e.dose_date = today;
      e.kind = DoseKind::Manual;
      e.timestamp = ts;
      e.marked_by = worker;
      out_.events.push_back(std::move(e));
      out_.notes.push_back(WorkerNote{next_note_id(), pid, worker, out_.patients[i].tb_unit_id,
                                      "manual_dose", ts});
      p.last_note = today;
    }
  }

  p.statuses.push_back(status);
  p.observed_days = day + 1;
  if (consumed) ++p.consumed;
  p.days_since_call = called ? 0 : p.days_since_call + 1;
}

void Engine::end_of_day(Date today) {
  const PolicyParams& pol = cfg_.policy;
  std::map<std::string, std::vector<std::size_t>> high_by_unit;
  std::vector<std::size_t> order(live_.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t i = 0; i < live_.size(); ++i) {
    Live& p = live_[i];
    const int day = today - p.enroll;
    if (day < 0 || day >= p.observed_days || p.statuses.size() != static_cast<std::size_t>(day + 1)) {
      continue;  // not present today
    }
    const int misses7 = p.misses_trailing(day, 7);
    const bool note = p.last_note && *p.last_note >= today - 6 && *p.last_note <= today;
    p.level = attention_step(misses7, p.level, note, cfg_.rules);
    p.levels.push_back(p.level);

    if (day + 1 >= p.length) continue;
    const std::string& pid = out_.patients[i].patient_id;
    const Date tomorrow = today + 1;

    if (p.statuses.back() == DayStatus::Missed) {
      if (misses7 == pol.sms_at_misses) {
        out_.ledger.events.push_back({pid, tomorrow, InterventionKind::Sms});
        p.boosts.push_back({day + 1, day + pol.sms_duration_days, pol.sms_boost});
      } else if (misses7 >= pol.phone_min_misses && misses7 <= pol.phone_max_misses) {
        out_.ledger.events.push_back({pid, tomorrow, InterventionKind::PhoneCall});
        p.boosts.push_back({day + 1, day + pol.phone_duration_days, pol.phone_boost});
      }
    }
    const bool cooled_down = day + 1 - p.last_visit_day >= pol.visit_duration_days;
    if (p.level == AttentionLevel::High && cooled_down) {
      high_by_unit[out_.patients[i].tb_unit_id].push_back(i);
    } else if (pol.mode == PolicyMode::Adversarial && p.level == AttentionLevel::Medium &&
               cooled_down && misses7 >= 1 && bernoulli(pol.adversarial_visit_prob)) {
      out_.ledger.events.push_back({pid, tomorrow, InterventionKind::HouseVisit});
      p.boosts.push_back({day + 1, day + pol.visit_duration_days, pol.visit_boost});
      p.last_visit_day = day + 1;
    }
  }

  for (auto& [unit, candidates] : high_by_unit) {
    std::shuffle(candidates.begin(), candidates.end(), rng_);
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      const int da = today - live_[a].enroll;
      const int db = today - live_[b].enroll;
      return live_[a].misses_trailing(da, 7) > live_[b].misses_trailing(db, 7);
    });
    const std::size_t n = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(pol.house_visit_budget));
    for (std::size_t k = 0; k < n; ++k) {
      Live& p = live_[candidates[k]];
      const int day = today - p.enroll;
      out_.ledger.events.push_back(
          {out_.patients[candidates[k]].patient_id, today + 1, InterventionKind::HouseVisit});
      p.boosts.push_back({day + 1, day + pol.visit_duration_days, pol.visit_boost});
      p.last_visit_day = day + 1;
    }
  }
}

void Engine::finalize() {
  const OutcomeParams& o = cfg_.outcome;
  for (std::size_t i = 0; i < live_.size(); ++i) {
    Live& p = live_[i];
    PatientRecord& rec = out_.patients[i];
    const int days = static_cast<int>(p.statuses.size());
    if (p.exited) {
      rec.outcome = p.exit_outcome;
      rec.end_date = p.enroll + (days - 1);
    } else if (days < p.length) {
      rec.outcome = Outcome::Ongoing;
      rec.end_date.reset();
    } else {
      const double consumed = static_cast<double>(p.consumed) / days;
      if (consumed >= o.favorable_min_consumed) {
        rec.outcome = uniform() < 0.5 ? Outcome::Cured : Outcome::TreatmentComplete;
      } else {
        rec.outcome = Outcome::TreatmentFailed;
      }
      rec.end_date = p.enroll + (days - 1);
    }
    out_.realtime_attention.push_back(AttentionTimeline{rec.patient_id, p.levels});
  }
}

SimulatedCohort Engine::run() {
  cfg_.validate();
  out_.config = cfg_;
  init_patients();

  Date first = live_.front().enroll;
  Date last = first;
  for (const Live& p : live_) {
    first = std::min(first, p.enroll);
    last = std::max(last, p.enroll + (p.length - 1));
  }
  if (cfg_.study_end) last = std::min(last, *cfg_.study_end);

  for (Date today = first; today <= last; today = today + 1) {
    for (std::size_t i = 0; i < live_.size(); ++i) simulate_day(i, today);
    end_of_day(today);
  }

  // Exits happen at the start of a day; patients exiting on their first
  // hazard-eligible day still have day 0 recorded.
  finalize();

  for (int s = 0; s < cfg_.stray_calls; ++s) {
    const Date d = first + uniform_int(0, last - first);
    DoseEvent e;
    e.event_id = next_event_id();
    e.dose_date = d;
    e.kind = DoseKind::Call;
    e.timestamp = Timestamp{d, uniform_int(0, 1439)};
    e.phone = new_phone();
    out_.stray_calls.push_back(std::move(e));
  }
  std::stable_sort(out_.ledger.events.begin(), out_.ledger.events.end(),
                   [](const InterventionEvent& a, const InterventionEvent& b) { return a.date < b.date; });
  return std::move(out_);
}

}  // namespace

Simulator::Simulator(SimConfig config) : config_(std::move(config)) { config_.validate(); }

void Simulator::set_policy_mode(PolicyMode mode) {
  if (ran_) throw InvalidInput("policy mode cannot change after the simulation has run");
  config_.policy.mode = mode;
}

SimulatedCohort Simulator::run() {
  if (ran_) throw InvalidInput("simulator already ran; construct a new one");
  ran_ = true;
  Engine engine(config_);
  return engine.run();
}

SimulatedCohort simulate_cohort(const SimConfig& config) {
  Simulator sim(config);
  return sim.run();
}

Cohort to_cohort(const SimulatedCohort& sim) {
  std::map<std::string, std::vector<DoseEvent>> events;
  std::map<std::string, std::vector<WorkerNote>> notes;
  for (const DoseEvent& e : sim.events) events[e.patient_id].push_back(e);
  for (const WorkerNote& n : sim.notes) notes[n.patient_id].push_back(n);
  Cohort cohort;
  cohort.reserve(sim.patients.size());
  for (const PatientRecord& rec : sim.patients) {
    std::optional<Date> as_of;
    if (!rec.end_date) as_of = sim.config.study_end;
    auto cal = build_calendar(rec, events[rec.patient_id], as_of);
    cohort.push_back(make_history(rec, std::move(cal), notes[rec.patient_id], sim.config.rules));
  }
  return cohort;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::filesystem::path> export_dataset(const SimulatedCohort& sim,
                                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;

  {
    const auto path = dir / "patients.csv";
    auto out = open_out(path);
    csv::write_row(out, {"patient_id", "enrollment_date", "end_date", "gender", "age_band",
                         "weight_band", "center_id", "tb_unit_id", "outcome"});
    for (const PatientRecord& p : sim.patients) {
      csv::write_row(out, {p.patient_id, p.enrollment_date.iso(), p.end_date ? p.end_date->iso() : "",
                           std::string(to_string(p.gender)), std::to_string(p.age_band),
                           std::to_string(p.weight_band), p.center_id, p.tb_unit_id,
                           std::string(to_string(p.outcome))});
    }
    written.push_back(path);
  }
  {
    const auto path = dir / "call_log.csv";
    auto out = open_out(path);
    csv::write_row(out, {"event_id", "phone", "timestamp", "dose_date", "kind", "marked_by",
                         "patient_id"});
    auto emit = [&](const DoseEvent& e) {
      const bool manual = e.kind == DoseKind::Manual;
      csv::write_row(out, {e.event_id, e.phone.value_or(""), e.timestamp.iso(), e.dose_date.iso(),
                           std::string(to_string(e.kind)), e.marked_by.value_or(""),
                           manual ? e.patient_id : ""});
    };
    for (const DoseEvent& e : sim.events) emit(e);
    for (const DoseEvent& e : sim.stray_calls) emit(e);
    written.push_back(path);
  }
  {
    const auto path = dir / "phone_map.csv";
    auto out = open_out(path);
    csv::write_row(out, {"phone", "patient_id"});
    for (const PhoneRegistration& r : sim.phone_map) csv::write_row(out, {r.phone, r.patient_id});
    written.push_back(path);
  }
  {
    const auto path = dir / "patient_log.csv";
    auto out = open_out(path);
    csv::write_row(out, {"note_id", "patient_id", "worker_id", "unit_id", "action", "timestamp"});
    for (const WorkerNote& n : sim.notes) {
      csv::write_row(out, {n.note_id, n.patient_id, n.worker_id, n.unit_id, n.action,
                           n.timestamp.iso()});
    }
    written.push_back(path);
  }
  {
    const auto path = dir / "ledger.csv";
    auto out = open_out(path);
    csv::write_row(out, {"patient_id", "date", "kind"});
    for (const InterventionEvent& e : sim.ledger.events) {
      csv::write_row(out, {e.patient_id, e.date.iso(), std::string(to_string(e.kind))});
    }
    written.push_back(path);
  }
  return written;
}

InterventionLedger load_ledger(const std::filesystem::path& file) {
  const csv::Table table = csv::read_file(file);
  if (table.header != csv::Row{"patient_id", "date", "kind"}) {
    throw InvalidInput(file.string() + ": unexpected ledger header");
  }
  InterventionLedger ledger;
  for (const csv::Row& row : table.rows) {
    if (row.size() != 3) throw InvalidInput(file.string() + ": ledger row with wrong arity");
    ledger.events.push_back({row[0], Date::parse(row[1]), parse_intervention_kind(row[2])});
  }
  return ledger;
}

}  // namespace adherence::sim
