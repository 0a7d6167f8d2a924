#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adherence/cohort.hpp"

namespace adherence::plan {

inline constexpr int kDays = 7;

using CoefRow = std::array<double, kDays>;

/// c[j][t] for t = 1..7 (stored 0-based). Truth rows are binary prefixes.
struct CoefMatrix {
  std::vector<CoefRow> rows;
  std::size_t size() const { return rows.size(); }
};

/// Success indicator of a visit on day t0 + t, t = 1..7: the patient is MEDIUM
/// on t0, misses some day of (t0, t0 + 7], and the visit is on or before the
/// first such miss. All zeros otherwise.
CoefRow true_coefficient_row(const PatientHistory& patient, int t0);

struct GroupMember {
  std::size_t patient = 0;  // index into the cohort
  int t0 = 0;               // week start (last observed day)
};

CoefMatrix true_coefficients(const Cohort& cohort, std::span<const GroupMember> group);

/// Locations x days reward matrix plus the patient -> location index.
struct PlanInstance {
  std::vector<std::string> locations;  // sorted; row i of `reward`
  Eigen::MatrixXd reward;              // L x 7
  std::vector<int> patient_location;   // per patient, index into `locations`

  int n_locations() const { return static_cast<int>(locations.size()); }
};

/// r_it = sum of c_jt over patients j at location i.
PlanInstance build_instance(std::span<const std::string> patient_locations, const CoefMatrix& c);

/// Re-aggregates new coefficients onto an existing instance layout.
Eigen::MatrixXd aggregate(const PlanInstance& layout, const CoefMatrix& c);

/// At most one location per day and each location at most once.
struct VisitPlan {
  std::array<int, kDays> day_location{-1, -1, -1, -1, -1, -1, -1};  // -1 = no visit
  double objective = 0.0;

  bool visits(int location, int day) const { return day_location[day] == location; }
  Eigen::MatrixXd as_matrix(int n_locations) const;
  bool operator==(const VisitPlan&) const = default;
};

bool feasible(const VisitPlan& plan, int n_locations);
double plan_value(const VisitPlan& plan, const Eigen::MatrixXd& reward);

/// Exact maximum-weight matching between days and locations (Hungarian
/// method on a padded rectangular matrix). Among optimal plans, the earliest
/// day takes the lowest location id; zero-reward cells are never visited.
VisitPlan solve_plan(const Eigen::MatrixXd& reward);
inline VisitPlan solve_plan(const PlanInstance& instance) { return solve_plan(instance.reward); }

/// Enumerates every injective partial map days -> locations. Throws for L > 8.
VisitPlan brute_force_plan(const Eigen::MatrixXd& reward);
inline VisitPlan brute_force_plan(const PlanInstance& instance) {
  return brute_force_plan(instance.reward);
}

/// Set-valued version of the enumeration, for counting candidate plans.
std::size_t count_feasible_plans(int n_locations, int n_days);

/// Number of patients reached on or before their first miss; each patient
/// counts at most once.
int evaluate_plan(const VisitPlan& plan, const CoefMatrix& truth,
                  std::span<const int> patient_location);

nlohmann::json to_json(const PlanInstance& instance);
nlohmann::json to_json(const VisitPlan& plan, const PlanInstance& instance);

}  // namespace adherence::plan
