#include "adherence/core.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace adherence {

namespace {

bool parse_fixed_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) {
    throw InvalidInput("invalid calendar date " + std::to_string(year) + "-" +
                       std::to_string(month) + "-" + std::to_string(day));
  }
  return Date(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !parse_fixed_int(text.substr(0, 4), y) || !parse_fixed_int(text.substr(5, 2), m) ||
      !parse_fixed_int(text.substr(8, 2), d)) {
    throw InvalidInput("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string Date::iso() const {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Timestamp Timestamp::parse(std::string_view text) {
  int hh = 0, mm = 0;
  if (text.size() != 16 || text[10] != 'T' || text[13] != ':' ||
      !parse_fixed_int(text.substr(11, 2), hh) || !parse_fixed_int(text.substr(14, 2), mm) ||
      hh > 23 || mm > 59) {
    throw InvalidInput("malformed timestamp '" + std::string(text) +
                       "' (expected YYYY-MM-DDThh:mm)");
  }
  return Timestamp{Date::parse(text.substr(0, 10)), hh * 60 + mm};
}

std::string Timestamp::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:%02d", hour(), minute());
  return date.iso() + buf;
}

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::M: return "M";
    case Gender::F: return "F";
    case Gender::O: return "O";
  }
  return "O";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Cured: return "Cured";
    case Outcome::TreatmentComplete: return "TreatmentComplete";
    case Outcome::Died: return "Died";
    case Outcome::TreatmentFailed: return "TreatmentFailed";
    case Outcome::LostToFollowUp: return "LostToFollowUp";
    case Outcome::Ongoing: return "Ongoing";
  }
  return "Ongoing";
}

std::string_view to_string(DoseKind k) { return k == DoseKind::Call ? "call" : "manual"; }

Gender parse_gender(std::string_view text) {
  if (text == "M") return Gender::M;
  if (text == "F") return Gender::F;
  if (text == "O") return Gender::O;
  throw InvalidInput("unknown gender '" + std::string(text) + "'");
}

Outcome parse_outcome(std::string_view text) {
  for (Outcome o : {Outcome::Cured, Outcome::TreatmentComplete, Outcome::Died,
                    Outcome::TreatmentFailed, Outcome::LostToFollowUp, Outcome::Ongoing}) {
    if (text == to_string(o)) return o;
  }
  throw InvalidInput("unknown outcome '" + std::string(text) + "'");
}

DoseKind parse_dose_kind(std::string_view text) {
  if (text == "call") return DoseKind::Call;
  if (text == "manual") return DoseKind::Manual;
  throw InvalidInput("unknown dose kind '" + std::string(text) + "'");
}

void PatientRecord::validate() const {
  if (patient_id.empty()) throw InvalidInput("patient with empty id");
  if (end_date.has_value() == (outcome == Outcome::Ongoing)) {
    throw InvalidInput("patient " + patient_id + ": end_date must be absent iff outcome is Ongoing");
  }
  if (end_date && *end_date < enrollment_date) {
    throw InvalidInput("patient " + patient_id + ": end_date precedes enrollment_date");
  }
  if (age_band < 0 || age_band >= kAgeBands) {
    throw InvalidInput("patient " + patient_id + ": age_band out of range");
  }
  if (weight_band < 0 || weight_band >= kWeightBands) {
    throw InvalidInput("patient " + patient_id + ": weight_band out of range");
  }
}

void DoseEvent::validate() const {
  if (kind == DoseKind::Call) {
    if (!phone || phone->empty()) throw InvalidInput("call event " + event_id + " without phone");
    if (timestamp.date != dose_date) {
      throw InvalidInput("call event " + event_id + " timestamp date differs from dose date");
    }
  }
}

char status_char(DayStatus s) {
  switch (s) {
    case DayStatus::TakenCall: return '1';
    case DayStatus::TakenManual: return 'm';
    case DayStatus::Missed: return '0';
    case DayStatus::Missing: return '_';
  }
  return '?';
}

AdherenceCalendar::AdherenceCalendar(std::string patient_id, Date start,
                                     std::vector<DayStatus> statuses,
                                     std::vector<std::vector<CallStamp>> calls)
    : patient_id_(std::move(patient_id)),
      start_(start),
      statuses_(std::move(statuses)),
      calls_(std::move(calls)) {
  if (statuses_.empty()) throw InvalidInput("calendar for " + patient_id_ + " has no days");
  if (calls_.size() != statuses_.size()) {
    throw InvalidInput("calendar for " + patient_id_ + ": call lists do not match day count");
  }
  for (std::size_t d = 0; d < statuses_.size(); ++d) {
    if (statuses_[d] == DayStatus::Missing) {
      throw InvalidInput("calendar for " + patient_id_ + " stores a Missing day");
    }
    if ((statuses_[d] == DayStatus::TakenCall) != !calls_[d].empty()) {
      throw InvalidInput("calendar for " + patient_id_ +
                         ": TakenCall days must be exactly the days with calls");
    }
  }
}

DayStatus AdherenceCalendar::status(int day) const {
  if (day < 0 || day >= size()) {
    throw OutOfRange("day " + std::to_string(day) + " outside calendar of " + patient_id_);
  }
  return statuses_[static_cast<std::size_t>(day)];
}

std::span<const CallStamp> AdherenceCalendar::calls(int day) const {
  if (day < 0 || day >= size()) {
    throw OutOfRange("day " + std::to_string(day) + " outside calendar of " + patient_id_);
  }
  return calls_[static_cast<std::size_t>(day)];
}

int AdherenceCalendar::day_index(Date d) const {
  if (!contains(d)) throw OutOfRange(d.iso() + " outside calendar of " + patient_id_);
  return d - start_;
}

int AdherenceCalendar::count(DayStatus s) const {
  return static_cast<int>(std::count(statuses_.begin(), statuses_.end(), s));
}

std::string AdherenceCalendar::adherence_string() const {
  std::string out;
  out.reserve(statuses_.size());
  for (DayStatus s : statuses_) out.push_back(status_char(s));
  return out;
}

AdherenceCalendar build_calendar(const PatientRecord& patient, std::span<const DoseEvent> events,
                                 std::optional<Date> as_of) {
  patient.validate();
  const Date start = patient.enrollment_date;
  Date end;
  if (patient.end_date) {
    end = *patient.end_date;
  } else if (as_of) {
    end = *as_of;
  } else {
    throw InvalidInput("patient " + patient.patient_id + " is Ongoing and no as_of date was given");
  }
  if (end < start) throw InvalidInput("patient " + patient.patient_id + ": empty treatment span");

  const auto n = static_cast<std::size_t>(end - start + 1);
  std::vector<bool> manual(n, false);
  std::vector<std::vector<CallStamp>> calls(n);
  for (const DoseEvent& e : events) {
    if (e.patient_id != patient.patient_id) {
      throw InvalidInput("event " + e.event_id + " belongs to " + e.patient_id + ", not " +
                         patient.patient_id);
    }
    e.validate();
    if (e.dose_date < start || e.dose_date > end) {
      throw OutOfRange("event " + e.event_id + " dose date " + e.dose_date.iso() +
                       " outside treatment span of " + patient.patient_id);
    }
    const auto day = static_cast<std::size_t>(e.dose_date - start);
    if (e.kind == DoseKind::Call) {
      calls[day].push_back(CallStamp{e.timestamp, *e.phone});
    } else {
      manual[day] = true;
    }
  }

  std::vector<DayStatus> statuses(n, DayStatus::Missed);
  for (std::size_t d = 0; d < n; ++d) {
    std::sort(calls[d].begin(), calls[d].end());
    if (!calls[d].empty()) {
      statuses[d] = DayStatus::TakenCall;
    } else if (manual[d]) {
      statuses[d] = DayStatus::TakenManual;
    }
  }
  return AdherenceCalendar(patient.patient_id, start, std::move(statuses), std::move(calls));
}

std::vector<DayStatus> window(const AdherenceCalendar& calendar, int t, int len, Padding pad) {
  if (len <= 0) throw InvalidInput("window length must be positive");
  if (t < 0 || t >= calendar.size()) {
    throw OutOfRange("window end " + std::to_string(t) + " outside calendar of " +
                     calendar.patient_id());
  }
  const int first = t - len + 1;
  if (first < 0 && pad == Padding::Forbid) {
    throw OutOfRange("window [" + std::to_string(first) + ", " + std::to_string(t) +
                     "] starts before enrollment of " + calendar.patient_id());
  }
  std::vector<DayStatus> out;
  out.reserve(static_cast<std::size_t>(len));
  for (int d = first; d <= t; ++d) {
    out.push_back(d < 0 ? DayStatus::Missing : calendar.status(d));
  }
  return out;
}

int missed_in_window(const AdherenceCalendar& calendar, int t, int len, Padding pad) {
  const auto w = window(calendar, t, len, pad);
  return static_cast<int>(std::count(w.begin(), w.end(), DayStatus::Missed));
}

}  // namespace adherence
