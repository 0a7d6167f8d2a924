#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace adherence::learn {

struct ForestConfig {
  int n_trees = 100;
  std::optional<int> max_depth = 5;  // absent = grow until pure
  std::uint64_t seed = 1;

  static ForestConfig risk() { return {100, 5, 1}; }
  static ForestConfig outcome() { return {150, std::nullopt, 1}; }
  static ForestConfig lcfo_zero_day() { return {300, 10, 1}; }
  static ForestConfig lcfo() { return {200, 10, 1}; }

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // positive fraction of the bootstrap samples reaching the node
};

/// Bagged CART classifier: Gini splits over sqrt(d) candidate features per
/// node; predicts the mean leaf positive fraction.
class Forest {
 public:
  static Forest train(const ForestConfig& config, const Eigen::MatrixXd& X, const std::vector<int>& y);

  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::vector<double> predict(const Eigen::MatrixXd& X) const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t n_trees() const { return trees_.size(); }
  const ForestConfig& config() const { return config_; }

  nlohmann::json to_json() const;
  static Forest from_json(const nlohmann::json& j);

 private:
  ForestConfig config_;
  int n_features_ = 0;
  std::vector<std::vector<TreeNode>> trees_;
  std::vector<std::string> warnings_;
};

}  // namespace adherence::learn
