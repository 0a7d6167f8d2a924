#pragma once

#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adherence/learn/dataset.hpp"

namespace adherence::learn {

/// L2-regularized logistic regression on [statics | call bits | cumulative
/// channel], fitted by Newton iterations.
class LogisticModel {
 public:
  static LogisticModel train(const Dataset& data, double l2 = 1e-2, int max_iterations = 50);

  std::vector<double> predict(const Dataset& data) const;
  const Eigen::VectorXd& weights() const { return w_; }
  double bias() const { return b_; }

  nlohmann::json to_json() const;
  static LogisticModel from_json(const nlohmann::json& j);

  static Eigen::MatrixXd design(const Dataset& data);

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

}  // namespace adherence::learn
