#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adherence {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or validation failure on caller-supplied data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A day index or window that falls outside the treatment span.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Timezone-naive calendar date, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Parses YYYY-MM-DD. Throws InvalidInput on anything else.
  static Date parse(std::string_view text);

  std::string iso() const;
  constexpr std::int32_t days_since_epoch() const { return days_; }

  constexpr Date operator+(int days) const { return Date(days_ + days); }
  constexpr Date operator-(int days) const { return Date(days_ - days); }
  constexpr int operator-(Date other) const { return days_ - other.days_; }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int32_t days_ = 0;
};

/// Minute-resolution local timestamp.
struct Timestamp {
  Date date;
  int minute_of_day = 0;  // [0, 1440)

  static Timestamp parse(std::string_view text);  // YYYY-MM-DDThh:mm
  std::string iso() const;
  int hour() const { return minute_of_day / 60; }
  int minute() const { return minute_of_day % 60; }
  auto operator<=>(const Timestamp&) const = default;
};

enum class Gender : std::uint8_t { M, F, O };

enum class Outcome : std::uint8_t {
  Cured,
  TreatmentComplete,
  Died,
  TreatmentFailed,
  LostToFollowUp,
  Ongoing
};

std::string_view to_string(Gender g);
std::string_view to_string(Outcome o);
Gender parse_gender(std::string_view text);
Outcome parse_outcome(std::string_view text);

inline bool is_terminal(Outcome o) { return o != Outcome::Ongoing; }
inline bool is_favorable(Outcome o) {
  return o == Outcome::Cured || o == Outcome::TreatmentComplete;
}
inline bool is_unfavorable(Outcome o) { return is_terminal(o) && !is_favorable(o); }

inline constexpr int kAgeBands = 5;
inline constexpr int kWeightBands = 4;

struct PatientRecord {
  std::string patient_id;
  Date enrollment_date;
  std::optional<Date> end_date;  // absent iff outcome == Ongoing
  Gender gender = Gender::O;
  int age_band = 0;     // [0, kAgeBands)
  int weight_band = 0;  // [0, kWeightBands)
  std::string center_id;
  std::string tb_unit_id;
  Outcome outcome = Outcome::Ongoing;

  void validate() const;
  bool operator==(const PatientRecord&) const = default;
};

enum class DoseKind : std::uint8_t { Call, Manual };
std::string_view to_string(DoseKind k);
DoseKind parse_dose_kind(std::string_view text);

struct DoseEvent {
  std::string event_id;
  std::string patient_id;
  Date dose_date;
  DoseKind kind = DoseKind::Call;
  Timestamp timestamp;
  std::optional<std::string> phone;      // calls only
  std::optional<std::string> marked_by;  // manual only

  void validate() const;
  bool operator==(const DoseEvent&) const = default;
};

struct WorkerNote {
  std::string note_id;
  std::string patient_id;
  std::string worker_id;
  std::string unit_id;
  std::string action;
  Timestamp timestamp;

  bool operator==(const WorkerNote&) const = default;
};

/// Per-day dose status. Missing marks padding before enrollment and is never
/// stored inside a calendar.
enum class DayStatus : std::uint8_t { TakenCall, TakenManual, Missed, Missing };

char status_char(DayStatus s);

struct CallStamp {
  Timestamp timestamp;
  std::string phone;
  auto operator<=>(const CallStamp&) const = default;
};

/// Day-indexed dose ledger over [enrollment, end]. Day 0 is enrollment.
class AdherenceCalendar {
 public:
  AdherenceCalendar() = default;
  AdherenceCalendar(std::string patient_id, Date start, std::vector<DayStatus> statuses,
                    std::vector<std::vector<CallStamp>> calls);

  const std::string& patient_id() const { return patient_id_; }
  Date start_date() const { return start_; }
  Date end_date() const { return start_ + (size() - 1); }
  int size() const { return static_cast<int>(statuses_.size()); }

  DayStatus status(int day) const;
  std::span<const CallStamp> calls(int day) const;
  std::span<const DayStatus> statuses() const { return statuses_; }

  bool contains(Date d) const { return d >= start_ && d <= end_date(); }
  int day_index(Date d) const;
  Date date_of(int day) const { return start_ + day; }

  int count(DayStatus s) const;
  /// One character per day: '1' call, 'm' manual, '0' missed.
  std::string adherence_string() const;

  bool operator==(const AdherenceCalendar&) const = default;

 private:
  std::string patient_id_;
  Date start_;
  std::vector<DayStatus> statuses_;
  std::vector<std::vector<CallStamp>> calls_;
};

/// Materializes the calendar. A call on a day wins over a manual mark; days
/// without events are Missed. Ongoing patients need `as_of` as the span end.
AdherenceCalendar build_calendar(const PatientRecord& patient, std::span<const DoseEvent> events,
                                 std::optional<Date> as_of = std::nullopt);

enum class Padding : std::uint8_t { Forbid, Allow };

/// The `len` statuses ending at day `t`. Days before enrollment come back as
/// Missing when padding is allowed.
std::vector<DayStatus> window(const AdherenceCalendar& calendar, int t, int len,
                              Padding pad = Padding::Forbid);

/// Missed (not Missing) days in window(calendar, t, len, pad).
int missed_in_window(const AdherenceCalendar& calendar, int t, int len = 7,
                     Padding pad = Padding::Forbid);

}  // namespace adherence
