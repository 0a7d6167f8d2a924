#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "adherence/cohort.hpp"
#include "adherence/evalkit.hpp"
#include "adherence/featurize.hpp"
#include "adherence/learn/leap.hpp"
#include "adherence/plan.hpp"

namespace adherence::service {

struct Response {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  std::filesystem::path state_dir;
  std::optional<Date> today;  // default: earliest enrollment + 60 days
  int group_size = 100;
};

/// A trained risk model with what it needs to score and explain a sample.
struct RiskArtifact {
  learn::LeapModel model;
  features::PercentileScaler scaler;
  eval::OcclusionReference reference;

  nlohmann::json to_json() const;
  static RiskArtifact from_json(const nlohmann::json& j);
};

/// Request handling without sockets. Reads share a lock; sim stepping and
/// plan edits take it exclusively.
class ServiceState {
 public:
  explicit ServiceState(const ServiceOptions& options);
  /// For tests: serve an in-memory cohort.
  /// `plan_model` has 7 outputs; without it the plan uses thresholded lw-misses.
  ServiceState(Cohort cohort, std::optional<RiskArtifact> risk,
               std::optional<RiskArtifact> plan_model, std::optional<Date> today,
               int group_size = 100);

  /// Routes one request. `session` is the X-Session header ("" = default).
  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::string& session = "");

  Date today() const;

 private:
  struct PlanWeek {
    std::vector<std::size_t> patients;  // cohort indices
    std::vector<int> anchors;
    Date start;                         // first planned day = anchor date + 1
    plan::PlanInstance predicted;       // reward from the model or lw-misses
    plan::CoefMatrix truth;
    std::string predictor;
  };
  struct Session {
    plan::VisitPlan plan = plan::VisitPlan{};
  };

  void init(std::optional<Date> today);
  void build_plan_week();
  Response cohort_view() const;
  Response patient_view(const std::string& id) const;
  Response risk_view(const std::string& id) const;
  Response plan_instance() const;
  Response plan_optimal() const;
  Response plan_choose(const std::string& body, const std::string& session);
  Response plan_reset(const std::string& session);
  Response sim_step(const std::string& body);
  nlohmann::json session_json(const Session& s) const;
  const PatientHistory* find(const std::string& id) const;
  int day_of(const PatientHistory& h) const;  // last visible day index, -1 before enrollment
  std::optional<int> realized_days() const;

  mutable std::shared_mutex mutex_;
  Cohort cohort_;
  std::optional<RiskArtifact> risk_;
  std::optional<RiskArtifact> plan_model_;
  std::string risk_missing_;
  Date today_;
  Date horizon_;
  int group_size_ = 100;
  std::optional<PlanWeek> week_;
  std::string week_missing_;
  std::map<std::string, Session> sessions_;
};

/// Blocks serving `state` on host:port. Throws when the port cannot be bound.
void serve(ServiceState& state, const std::string& host, int port);

}  // namespace adherence::service
