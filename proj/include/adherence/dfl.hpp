#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adherence/learn/dataset.hpp"
#include "adherence/learn/leap.hpp"
#include "adherence/plan.hpp"

namespace adherence::plan {

/// One planning instance: dataset rows of its patients, the location layout,
/// and the true coefficients.
struct PlanGroup {
  std::vector<std::size_t> rows;
  PlanInstance instance;  // reward = true r
  CoefMatrix truth;
};

/// Shuffles the planning samples and cuts them into groups of `group_size`;
/// a short remainder is dropped.
std::vector<PlanGroup> make_groups(const std::vector<tasks::TaskSample>& samples, int group_size,
                                   std::uint64_t seed);

CoefMatrix to_coefficients(const Eigen::MatrixXd& probabilities);

/// Predicted coefficients of a group's patients (rows x 7).
CoefMatrix predict_coefficients(const learn::LeapModel& model, const learn::Dataset& data,
                                const PlanGroup& group);

/// Thresholded last-week misses: c_jt = 1 for all t iff misses >= tau.
CoefMatrix lw_misses_coefficients(const std::vector<tasks::TaskSample>& samples,
                                  const PlanGroup& group, int tau = 1);

/// Successful interventions of the exact plan on predicted coefficients.
int realized_value(const CoefMatrix& predicted, const PlanGroup& group);

struct DflConfig {
  double gamma = 0.1;
  int epochs = 10;
  int groups_per_step = 1;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
};

struct DflResult {
  learn::LeapModel model;
  std::vector<double> soft_objective;  // mean c_true . x*(r_hat) per epoch, entry 0 = start
  std::vector<double> hard_objective;  // mean successful interventions per epoch
  std::vector<std::string> warnings;
};

/// Soft decision value c_true . x*(r_hat) and, when `grad` is set, its
/// negative gradient with respect to the model parameters.
double decision_value(const learn::LeapModel& model, const learn::Dataset& data,
                      const PlanGroup& group, double gamma, Eigen::VectorXd* neg_grad = nullptr,
                      std::vector<std::string>* warnings = nullptr);

/// Trains through the regularized LP: loss per instance is -(r_true . x*(r_hat)).
DflResult dfl_train(const DflConfig& config, const learn::LeapModel& warm_start,
                    const learn::Dataset& data, const std::vector<PlanGroup>& groups);

}  // namespace adherence::plan
