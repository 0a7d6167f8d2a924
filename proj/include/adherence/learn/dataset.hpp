#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adherence/featurize.hpp"
#include "adherence/tasklab.hpp"

namespace adherence::learn {

/// Model-ready matrices, one row per sample.
struct Dataset {
  int k = 0;
  Eigen::MatrixXd calls;    // n x k call bits
  Eigen::MatrixXd cum;      // n x k lifetime misses / days elapsed
  Eigen::MatrixXd statics;  // n x 29 percentile-scaled
  Eigen::MatrixXd targets;  // n x outputs
  std::vector<int> labels;  // binary label used for balancing
  std::vector<std::size_t> source;  // originating sample index

  std::size_t size() const { return labels.size(); }
  int outputs() const { return static_cast<int>(targets.cols()); }
};

/// `outputs` = 1 uses TaskSample::label, 7 uses TaskSample::coef.
Dataset make_dataset(const std::vector<tasks::TaskSample>& samples,
                     const features::PercentileScaler& scaler, int outputs = 1);

/// Scaled cumulative-miss channel of one sample.
std::vector<double> scaled_cumulative(const tasks::TaskSample& sample);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);

/// SMOTE on the static block; sequences and targets are copied from the seed
/// row of each synthetic sample.
Dataset oversample(const Dataset& data, int k_neighbors, std::uint64_t seed,
                   std::vector<std::string>* warnings = nullptr);

std::vector<std::vector<double>> raw_features(const std::vector<tasks::TaskSample>& samples);
features::PercentileScaler fit_scaler(const std::vector<tasks::TaskSample>& train);

}  // namespace adherence::learn
