#pragma once

// JSON bindings for configuration types. Missing keys fall back to defaults.

#include <optional>

#include <json.hpp>

#include "adherence/attention.hpp"
#include "adherence/core.hpp"
#include "adherence/simkit.hpp"

namespace nlohmann {

template <typename T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& value) {
    if (value) {
      j = *value;
    } else {
      j = nullptr;
    }
  }
  static void from_json(const json& j, std::optional<T>& value) {
    if (j.is_null()) {
      value.reset();
    } else {
      value = j.get<T>();
    }
  }
};

}  // namespace nlohmann

namespace adherence {

inline void to_json(nlohmann::json& j, const Date& d) { j = d.iso(); }
inline void from_json(const nlohmann::json& j, Date& d) { d = Date::parse(j.get<std::string>()); }

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AttentionRules, medium_max_misses, high_min_misses,
                                                note_overrides_high)

namespace sim {

NLOHMANN_JSON_SERIALIZE_ENUM(PolicyMode, {{PolicyMode::ProxyRespecting, "proxy_respecting"},
                                          {PolicyMode::Adversarial, "adversarial"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ArchetypeMix, steady, decliner, sporadic, non_caller)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    BehaviorParams, steady_call_prob, decliner_high_prob, decliner_low_prob, decliner_ramp_days,
    decliner_onset_min_frac, decliner_onset_max_frac, sporadic_good_prob_min,
    sporadic_good_prob_max, sporadic_bad_prob_min, sporadic_bad_prob_max, sporadic_to_bad,
    sporadic_to_good, non_caller_consume_prob, non_caller_call_prob,
    non_caller_onboarding_manual_prob, non_caller_manual_prob, onboarding_days,
    consume_without_call_prob, caller_manual_prob, backlog_prob, duplicate_call_prob,
    preferred_hour_mean, preferred_hour_sd, steady_jitter_minutes, sporadic_jitter_minutes,
    decliner_late_jitter_minutes, decliner_jitter_lead_days, second_phone_prob)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PolicyParams, mode, house_visit_budget,
                                                visit_boost, visit_duration_days, sms_boost,
                                                sms_duration_days, phone_boost,
                                                phone_duration_days, sms_at_misses,
                                                phone_min_misses, phone_max_misses,
                                                adversarial_visit_prob)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OutcomeParams, favorable_min_consumed,
                                                hazard_base, hazard_per_miss_rate, died_share)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimConfig, n_patients, mix, behavior, policy,
                                                outcome, rules, n_centers, n_tb_units,
                                                length_min_days, length_max_days, start_date,
                                                enrollment_window_days, study_end,
                                                shared_phone_pairs, stray_calls, seed)

}  // namespace sim
}  // namespace adherence
