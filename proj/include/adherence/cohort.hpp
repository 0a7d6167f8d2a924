#pragma once

#include <string>
#include <vector>

#include "adherence/attention.hpp"
#include "adherence/core.hpp"

namespace adherence {

/// Everything the labelers need about one patient.
struct PatientHistory {
  PatientRecord record;
  AdherenceCalendar calendar;
  std::vector<WorkerNote> notes;
  AttentionTimeline timeline;
};

using Cohort = std::vector<PatientHistory>;

inline PatientHistory make_history(PatientRecord record, AdherenceCalendar calendar,
                                   std::vector<WorkerNote> notes,
                                   const AttentionRules& rules = {}) {
  AttentionTimeline timeline = attention_timeline(calendar, notes, rules);
  return PatientHistory{std::move(record), std::move(calendar), std::move(notes),
                        std::move(timeline)};
}

}  // namespace adherence
