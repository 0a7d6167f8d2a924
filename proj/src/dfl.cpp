#include "adherence/dfl.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "adherence/learn/heuristics.hpp"
#include "adherence/soft_plan.hpp"

namespace adherence::plan {

std::vector<PlanGroup> make_groups(const std::vector<tasks::TaskSample>& samples, int group_size,
                                   std::uint64_t seed) {
  if (group_size < 1) throw InvalidInput("group size must be positive");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<PlanGroup> groups;
  for (std::size_t start = 0; start + group_size <= order.size(); start += group_size) {
    PlanGroup g;
    g.rows.assign(order.begin() + start, order.begin() + start + group_size);
    std::vector<std::string> locations;
    for (std::size_t r : g.rows) {
      const tasks::TaskSample& s = samples[r];
      if (s.coef.size() != kDays) throw InvalidInput("planning sample without coefficients");
      CoefRow row{};
      for (int t = 0; t < kDays; ++t) row[t] = s.coef[t];
      g.truth.rows.push_back(row);
      locations.push_back(s.location);
    }
    g.instance = build_instance(locations, g.truth);
    groups.push_back(std::move(g));
  }
  return groups;
}

CoefMatrix to_coefficients(const Eigen::MatrixXd& p) {
  if (p.cols() != kDays) throw InvalidInput("coefficient predictions need 7 columns");
  CoefMatrix c;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    CoefRow row{};
    for (int t = 0; t < kDays; ++t) row[t] = p(r, t);
    c.rows.push_back(row);
  }
  return c;
}

CoefMatrix predict_coefficients(const learn::LeapModel& model, const learn::Dataset& data,
                                const PlanGroup& group) {
  return to_coefficients(model.forward(learn::gather(data, group.rows)));
}

CoefMatrix lw_misses_coefficients(const std::vector<tasks::TaskSample>& samples,
                                  const PlanGroup& group, int tau) {
  CoefMatrix c;
  for (std::size_t r : group.rows) {
    const int misses = learn::heuristic_score(learn::Heuristic::LwMisses, samples[r]);
    CoefRow row{};
    row.fill(misses >= tau ? 1.0 : 0.0);
    c.rows.push_back(row);
  }
  return c;
}

int realized_value(const CoefMatrix& predicted, const PlanGroup& group) {
  const VisitPlan plan = solve_plan(aggregate(group.instance, predicted));
  return evaluate_plan(plan, group.truth, group.instance.patient_location);
}

double decision_value(const learn::LeapModel& model, const learn::Dataset& data,
                      const PlanGroup& group, double gamma, Eigen::VectorXd* neg_grad,
                      std::vector<std::string>* warnings) {
  const learn::LeapInputs in = learn::gather(data, group.rows);
  learn::LeapModel::Tape tape;
  const Eigen::MatrixXd z = model.logits(in, neg_grad ? &tape : nullptr);
  const Eigen::MatrixXd p = (1.0 + (-z.array()).exp()).inverse().matrix();
  const Eigen::MatrixXd r_hat = aggregate(group.instance, to_coefficients(p));
  const Eigen::MatrixXd& r_true = group.instance.reward;
  const SoftSolution sol = soft_solve(r_hat, gamma);
  const double value = (sol.x.array() * r_true.array()).sum();
  if (neg_grad) {
    // d(-value)/d r_hat = -J^T r_true, then through the aggregation and sigmoid.
    const Eigen::MatrixXd d_rhat = -soft_vjp(r_hat, gamma, r_true, warnings);
    Eigen::MatrixXd d_logit(p.rows(), p.cols());
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
      const int loc = group.instance.patient_location[j];
      for (int t = 0; t < kDays; ++t) d_logit(j, t) = d_rhat(loc, t) * p(j, t) * (1.0 - p(j, t));
    }
    *neg_grad = model.backward(tape, d_logit);
  }
  return value;
}

DflResult dfl_train(const DflConfig& config, const learn::LeapModel& warm_start,
                    const learn::Dataset& data, const std::vector<PlanGroup>& groups) {
  if (groups.empty()) throw InvalidInput("decision-focused training needs at least one group");
  if (warm_start.outputs() != kDays) throw InvalidInput("decision-focused model needs 7 outputs");
  if (!(config.gamma > 0.0)) throw InvalidInput("gamma must be positive");
  DflResult out;
  out.model = warm_start;
  const auto record = [&]() {
    double soft = 0.0, hard = 0.0;
    for (const PlanGroup& g : groups) {
      soft += decision_value(out.model, data, g, config.gamma);
      hard += realized_value(predict_coefficients(out.model, data, g), g);
    }
    out.soft_objective.push_back(soft / groups.size());
    out.hard_objective.push_back(hard / groups.size());
  };
  record();

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  learn::Adam adam(config.learning_rate);
  const int per_step = std::max(1, config.groups_per_step);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += per_step) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(per_step));
      Eigen::VectorXd total = Eigen::VectorXd::Zero(out.model.n_params());
      Eigen::VectorXd g;
      for (std::size_t k = start; k < end; ++k) {
        decision_value(out.model, data, groups[order[k]], config.gamma, &g, &out.warnings);
        total += g;
      }
      total /= static_cast<double>(end - start);
      if (!total.allFinite()) {
        throw Error("decision-focused gradient is not finite in epoch " + std::to_string(epoch));
      }
      adam.step(out.model.params(), total);
    }
    record();
  }
  return out;
}

}  // namespace adherence::plan
