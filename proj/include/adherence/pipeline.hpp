#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adherence/dfl.hpp"
#include "adherence/evalkit.hpp"
#include "adherence/learn/forest.hpp"
#include "adherence/learn/leap.hpp"
#include "adherence/simkit.hpp"

namespace adherence::pipeline {

struct RiskExperimentConfig {
  sim::SimConfig sim;
  learn::LeapConfig leap = learn::LeapConfig::risk();
  learn::ForestConfig forest = learn::ForestConfig::risk();
  double test_frac = 0.25;
  std::uint64_t split_seed = 11;
  int smote_k = 5;
};

struct RiskExperimentResult {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double test_positive_rate = 0.0;
  double auc_leap = 0.0;
  double auc_forest = 0.0;
  double auc_logistic = 0.0;
  double auc_lw_misses = 0.0;
  eval::DosesCaughtTable caught;
  std::vector<eval::FprRow> fpr_rows;  // lw-misses (a) vs LEAP (b)
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

/// Simulate -> risk samples -> patient split -> scale -> SMOTE -> fit LEAP,
/// forest and logistic -> test AUCs against lw-misses.
RiskExperimentResult run_risk_experiment(const RiskExperimentConfig& config);

struct PlanBenchmarkConfig {
  sim::SimConfig sim;
  learn::LeapConfig leap = learn::LeapConfig::risk();
  plan::DflConfig dfl;
  int group_size = 100;
  double test_frac = 0.25;
  std::uint64_t split_seed = 13;
  std::uint64_t group_seed = 17;
  int smote_k = 5;
};

struct PlanBenchmarkResult {
  std::size_t n_train_groups = 0;
  std::size_t n_test_groups = 0;
  double mean_optimal = 0.0;
  double mean_two_stage = 0.0;
  double mean_dfl = 0.0;
  double mean_lw_misses = 0.0;
  double auc_two_stage = 0.0;  // per (patient, day) coefficient
  double auc_dfl = 0.0;
  double corr_two_stage = 0.0;  // predicted vs true r, all location-days
  double corr_dfl = 0.0;
  double corr_two_stage_gt1 = 0.0;  // pairs with true r > 1
  double corr_dfl_gt1 = 0.0;
  std::vector<double> dfl_train_hard;
  std::vector<double> dfl_train_soft;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

/// Two-stage LEAP (cross-entropy on the 7 coefficients) vs the same model
/// fine-tuned through the regularized LP, on held-out groups.
PlanBenchmarkResult run_plan_benchmark(const PlanBenchmarkConfig& config);

struct LcfoExperimentResult {
  std::size_t n_samples = 0;
  double positive_rate = 0.0;
  double auc_lw_manual = 0.0;
  double auc_lw_misses = 0.0;
};

LcfoExperimentResult run_lcfo_experiment(const sim::SimConfig& config);

}  // namespace adherence::pipeline
