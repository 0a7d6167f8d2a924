#include "adherence/plan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace adherence::plan {

namespace {

// Minimum-cost assignment of every row to a distinct column (rows <= cols).
// Returns the column of each row.
std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

// Optimal matching value over the days and locations not yet taken.
double residual_optimum(const Eigen::MatrixXd& reward, const std::vector<char>& day_taken,
                        const std::vector<char>& loc_taken) {
  std::vector<int> days, locs;
  for (int t = 0; t < kDays; ++t) {
    if (!day_taken[t]) days.push_back(t);
  }
  for (int i = 0; i < reward.rows(); ++i) {
    if (!loc_taken[i]) locs.push_back(i);
  }
  if (days.empty() || locs.empty()) return 0.0;
  const int n = static_cast<int>(days.size());
  const int m = static_cast<int>(locs.size());
  // Padding columns let any day go unvisited at zero value.
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, m + n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < m; ++b) cost(a, b) = -std::max(0.0, reward(locs[b], days[a]));
  }
  const std::vector<int> assign = hungarian_min(cost);
  double value = 0.0;
  for (int a = 0; a < n; ++a) value -= cost(a, assign[a]);
  return value;
}

double tie_tolerance(double optimum) { return 1e-9 * std::max(1.0, std::abs(optimum)); }

void check_reward(const Eigen::MatrixXd& reward) {
  if (reward.cols() != kDays) throw InvalidInput("reward matrix must have 7 day columns");
  if (reward.rows() < 1) throw InvalidInput("reward matrix has no locations");
  if (!reward.allFinite()) throw InvalidInput("reward matrix has non-finite entries");
}

}  // namespace

CoefRow true_coefficient_row(const PatientHistory& patient, int t0) {
  const AdherenceCalendar& cal = patient.calendar;
  if (t0 < 0 || t0 + kDays > cal.size() - 1) {
    throw OutOfRange("week starting at day " + std::to_string(t0) + " exceeds the span of " +
                     cal.patient_id());
  }
  CoefRow row{};
  if (patient.timeline.at(t0) != AttentionLevel::Medium) return row;
  for (int t = 1; t <= kDays; ++t) {
    if (cal.status(t0 + t) == DayStatus::Missed) {
      for (int s = 1; s <= t; ++s) row[s - 1] = 1.0;
      break;
    }
  }
  return row;
}

CoefMatrix true_coefficients(const Cohort& cohort, std::span<const GroupMember> group) {
  CoefMatrix c;
  c.rows.reserve(group.size());
  for (const GroupMember& g : group) {
    if (g.patient >= cohort.size()) throw InvalidInput("group member outside the cohort");
    c.rows.push_back(true_coefficient_row(cohort[g.patient], g.t0));
  }
  return c;
}

PlanInstance build_instance(std::span<const std::string> patient_locations, const CoefMatrix& c) {
  if (patient_locations.empty()) throw InvalidInput("cannot build a plan instance for an empty group");
  if (patient_locations.size() != c.size()) {
    throw InvalidInput("coefficient rows do not match the group size");
  }
  PlanInstance inst;
  for (const std::string& loc : patient_locations) {
    if (loc.empty()) throw InvalidInput("patient without a location in plan group");
    inst.locations.push_back(loc);
  }
  std::sort(inst.locations.begin(), inst.locations.end());
  inst.locations.erase(std::unique(inst.locations.begin(), inst.locations.end()),
                       inst.locations.end());
  for (const std::string& loc : patient_locations) {
    const auto it = std::lower_bound(inst.locations.begin(), inst.locations.end(), loc);
    inst.patient_location.push_back(static_cast<int>(it - inst.locations.begin()));
  }
  inst.reward = aggregate(inst, c);
  return inst;
}

Eigen::MatrixXd aggregate(const PlanInstance& layout, const CoefMatrix& c) {
  if (c.size() != layout.patient_location.size()) {
    throw InvalidInput("coefficient rows do not match the instance layout");
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(layout.n_locations(), kDays);
  for (std::size_t j = 0; j < c.size(); ++j) {
    for (int t = 0; t < kDays; ++t) r(layout.patient_location[j], t) += c.rows[j][t];
  }
  return r;
}

Eigen::MatrixXd VisitPlan::as_matrix(int n_locations) const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_locations, kDays);
  for (int t = 0; t < kDays; ++t) {
    if (day_location[t] >= 0) x(day_location[t], t) = 1.0;
  }
  return x;
}

bool feasible(const VisitPlan& plan, int n_locations) {
  std::vector<char> seen(n_locations, 0);
  for (int loc : plan.day_location) {
    if (loc < -1 || loc >= n_locations) return false;
    if (loc < 0) continue;
    if (seen[loc]) return false;
    seen[loc] = 1;
  }
  return true;
}

double plan_value(const VisitPlan& plan, const Eigen::MatrixXd& reward) {
  double v = 0.0;
  for (int t = 0; t < kDays; ++t) {
    if (plan.day_location[t] >= 0) v += reward(plan.day_location[t], t);
  }
  return v;
}

VisitPlan solve_plan(const Eigen::MatrixXd& reward) {
  check_reward(reward);
  const int n_loc = static_cast<int>(reward.rows());
  std::vector<char> day_taken(kDays, 0), loc_taken(n_loc, 0);
  const double optimum = residual_optimum(reward, day_taken, loc_taken);
  const double tol = tie_tolerance(optimum);

  VisitPlan plan;
  double fixed = 0.0;
  for (int t = 0; t < kDays; ++t) {
    day_taken[t] = 1;
    for (int i = 0; i < n_loc; ++i) {
      if (loc_taken[i] || reward(i, t) <= 0.0) continue;
      loc_taken[i] = 1;
      if (fixed + reward(i, t) + residual_optimum(reward, day_taken, loc_taken) >= optimum - tol) {
        plan.day_location[t] = i;
        fixed += reward(i, t);
        break;
      }
      loc_taken[i] = 0;
    }
  }
  plan.objective = plan_value(plan, reward);
  return plan;
}

VisitPlan brute_force_plan(const Eigen::MatrixXd& reward) {
  check_reward(reward);
  const int n_loc = static_cast<int>(reward.rows());
  if (n_loc > 8) throw InvalidInput("brute_force_plan is limited to 8 locations");

  std::vector<char> used(n_loc, 0);
  VisitPlan current;
  std::vector<VisitPlan> order;  // every candidate, lexicographic order
  std::function<void(int)> rec = [&](int t) {
    if (t == kDays) {
      current.objective = plan_value(current, reward);
      order.push_back(current);
      return;
    }
    for (int i = 0; i < n_loc; ++i) {
      if (used[i] || reward(i, t) <= 0.0) continue;
      used[i] = 1;
      current.day_location[t] = i;
      rec(t + 1);
      used[i] = 0;
    }
    current.day_location[t] = -1;
    rec(t + 1);
  };
  rec(0);

  double best = 0.0;
  for (const VisitPlan& p : order) best = std::max(best, p.objective);
  const double tol = tie_tolerance(best);
  for (const VisitPlan& p : order) {
    if (p.objective >= best - tol) return p;
  }
  return order.back();
}

std::size_t count_feasible_plans(int n_locations, int n_days) {
  std::vector<char> used(n_locations, 0);
  std::function<std::size_t(int)> rec = [&](int t) -> std::size_t {
    if (t == n_days) return 1;
    std::size_t total = rec(t + 1);
    for (int i = 0; i < n_locations; ++i) {
      if (used[i]) continue;
      used[i] = 1;
      total += rec(t + 1);
      used[i] = 0;
    }
    return total;
  };
  return rec(0);
}

int evaluate_plan(const VisitPlan& plan, const CoefMatrix& truth,
                  std::span<const int> patient_location) {
  if (truth.size() != patient_location.size()) {
    throw InvalidInput("truth rows do not match the patient locations");
  }
  int reached = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    for (int t = 0; t < kDays; ++t) {
      if (plan.day_location[t] == patient_location[j] && truth.rows[j][t] > 0.5) {
        ++reached;
        break;
      }
    }
  }
  return reached;
}

nlohmann::json to_json(const PlanInstance& instance) {
  nlohmann::json j;
  j["locations"] = instance.locations;
  j["reward"] = nlohmann::json::array();
  for (int i = 0; i < instance.reward.rows(); ++i) {
    std::vector<double> row;
    for (int t = 0; t < kDays; ++t) row.push_back(instance.reward(i, t));
    j["reward"].push_back(row);
  }
  j["patient_location"] = instance.patient_location;
  return j;
}

nlohmann::json to_json(const VisitPlan& plan, const PlanInstance& instance) {
  nlohmann::json j;
  j["objective"] = plan.objective;
  j["visits"] = nlohmann::json::array();
  for (int t = 0; t < kDays; ++t) {
    const int loc = plan.day_location[t];
    j["visits"].push_back(loc < 0 ? nlohmann::json(nullptr) : nlohmann::json(instance.locations[loc]));
  }
  const Eigen::MatrixXd x = plan.as_matrix(instance.n_locations());
  j["x"] = nlohmann::json::array();
  for (int i = 0; i < x.rows(); ++i) {
    std::vector<int> row;
    for (int t = 0; t < kDays; ++t) row.push_back(static_cast<int>(x(i, t)));
    j["x"].push_back(row);
  }
  return j;
}

}  // namespace adherence::plan
