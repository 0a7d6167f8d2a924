#pragma once

#include <string>
#include <vector>

#include "adherence/cohort.hpp"

namespace fixtures {

using namespace adherence;

/// '1' call, 'm' manual, '0' missed. Call days get one 09:00 stamp.
inline AdherenceCalendar calendar_from(const std::string& days, const std::string& id = "P1",
                                       Date start = Date::from_ymd(2018, 1, 1)) {
  std::vector<DayStatus> st;
  std::vector<std::vector<CallStamp>> calls;
  for (std::size_t d = 0; d < days.size(); ++d) {
    const char c = days[d];
    st.push_back(c == '1' ? DayStatus::TakenCall : c == 'm' ? DayStatus::TakenManual : DayStatus::Missed);
    calls.emplace_back();
    if (c == '1') calls.back().push_back({Timestamp{start + static_cast<int>(d), 9 * 60}, "900"});
  }
  return AdherenceCalendar(id, start, st, calls);
}

inline PatientRecord record_for(const std::string& id, int n_days, Outcome outcome = Outcome::Cured,
                                Date start = Date::from_ymd(2018, 1, 1), const std::string& unit = "U0") {
  PatientRecord r;
  r.patient_id = id;
  r.enrollment_date = start;
  r.outcome = outcome;
  if (outcome != Outcome::Ongoing) r.end_date = start + (n_days - 1);
  r.gender = Gender::F;
  r.age_band = 2;
  r.weight_band = 1;
  r.center_id = "C1";
  r.tb_unit_id = unit;
  return r;
}

inline PatientHistory history_from(const std::string& days, const std::string& id = "P1",
                                   Outcome outcome = Outcome::Cured, const std::string& unit = "U0") {
  return make_history(record_for(id, static_cast<int>(days.size()), outcome, Date::from_ymd(2018, 1, 1), unit),
                      calendar_from(days, id), {});
}

}  // namespace fixtures
