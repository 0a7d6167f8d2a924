#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adherence/core.hpp"

namespace adherence {

enum class AttentionLevel : std::uint8_t { Medium, High };

std::string_view to_string(AttentionLevel level);

/// Dashboard thresholds. A worker note in the trailing 7 days forces MEDIUM;
/// with `note_overrides_high` off the note only applies below the HIGH
/// threshold.
struct AttentionRules {
  int medium_max_misses = 1;
  int high_min_misses = 4;
  bool note_overrides_high = true;
};

/// One day of the "Attention Required" state machine.
AttentionLevel attention_step(int misses7, AttentionLevel prev, bool note_in_last_7d,
                              const AttentionRules& rules = {});

struct AttentionTimeline {
  std::string patient_id;
  std::vector<AttentionLevel> levels;  // one per treatment day

  AttentionLevel at(int day) const;
  int size() const { return static_cast<int>(levels.size()); }
  bool operator==(const AttentionTimeline&) const = default;
};

/// True when some note is dated within [date - 6, date].
bool note_in_trailing_week(std::span<const WorkerNote> notes, Date date);

/// Replays attention_step across the calendar starting from MEDIUM, using the
/// padded trailing 7-day window of each day.
AttentionTimeline attention_timeline(const AdherenceCalendar& calendar,
                                     std::span<const WorkerNote> notes,
                                     const AttentionRules& rules = {});

struct RiskPoint {
  bool eligible = false;
  int label = 0;
  std::optional<int> transition_day;

  /// Last day whose observations determine the label: the transition day for
  /// positives, t + 7 otherwise.
  int label_day(int t) const { return transition_day.value_or(t + 7); }
};

/// Screens a prediction point: only patients at MEDIUM on day t are eligible;
/// the label is whether they reach HIGH on some day in [t+1, t+7].
RiskPoint screen_risk_point(const AttentionTimeline& timeline, const AdherenceCalendar& calendar,
                            int t);

}  // namespace adherence
