#include "adherence/attention.hpp"

namespace adherence {

std::string_view to_string(AttentionLevel level) {
  return level == AttentionLevel::High ? "HIGH" : "MEDIUM";
}

AttentionLevel attention_step(int misses7, AttentionLevel prev, bool note_in_last_7d,
                              const AttentionRules& rules) {
  if (misses7 < 0 || misses7 > 7) {
    throw InvalidInput("misses7 must lie in [0, 7], got " + std::to_string(misses7));
  }
  if (note_in_last_7d && (rules.note_overrides_high || misses7 < rules.high_min_misses)) {
    return AttentionLevel::Medium;
  }
  if (misses7 <= rules.medium_max_misses) return AttentionLevel::Medium;
  if (misses7 >= rules.high_min_misses) return AttentionLevel::High;
  return prev;
}

AttentionLevel AttentionTimeline::at(int day) const {
  if (day < 0 || day >= size()) {
    throw OutOfRange("day " + std::to_string(day) + " outside attention timeline of " +
                     patient_id);
  }
  return levels[static_cast<std::size_t>(day)];
}

bool note_in_trailing_week(std::span<const WorkerNote> notes, Date date) {
  for (const WorkerNote& n : notes) {
    if (n.timestamp.date <= date && n.timestamp.date >= date - 6) return true;
  }
  return false;
}

AttentionTimeline attention_timeline(const AdherenceCalendar& calendar,
                                     std::span<const WorkerNote> notes,
                                     const AttentionRules& rules) {
  AttentionTimeline out{calendar.patient_id(), {}};
  out.levels.reserve(static_cast<std::size_t>(calendar.size()));
  // Running count over the trailing window instead of re-scanning each day.
  int misses = 0;
  AttentionLevel prev = AttentionLevel::Medium;
  for (int d = 0; d < calendar.size(); ++d) {
    if (calendar.status(d) == DayStatus::Missed) ++misses;
    if (d >= 7 && calendar.status(d - 7) == DayStatus::Missed) --misses;
    prev = attention_step(misses, prev, note_in_trailing_week(notes, calendar.date_of(d)), rules);
    out.levels.push_back(prev);
  }
  return out;
}

RiskPoint screen_risk_point(const AttentionTimeline& timeline, const AdherenceCalendar& calendar,
                            int t) {
  if (timeline.size() != calendar.size()) {
    throw InvalidInput("timeline and calendar of " + calendar.patient_id() + " differ in length");
  }
  if (t < 0 || t + 7 >= calendar.size()) {
    throw OutOfRange("risk point " + std::to_string(t) + " needs days through t+7 within span of " +
                     calendar.patient_id());
  }
  RiskPoint point;
  if (timeline.at(t) == AttentionLevel::High) return point;
  point.eligible = true;
  for (int d = t + 1; d <= t + 7; ++d) {
    if (timeline.at(d) == AttentionLevel::High) {
      point.label = 1;
      point.transition_day = d;
      break;
    }
  }
  return point;
}

}  // namespace adherence
