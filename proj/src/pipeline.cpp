#include "adherence/pipeline.hpp"

#include <chrono>
#include <functional>
#include <numeric>

#include "adherence/learn/heuristics.hpp"
#include "adherence/learn/logistic.hpp"
#include "adherence/tasklab.hpp"

namespace adherence::pipeline {

namespace {

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> labels_of(const std::vector<tasks::TaskSample>& samples) {
  std::vector<int> y;
  for (const auto& s : samples) y.push_back(s.label);
  return y;
}

double mean_value(const std::vector<plan::PlanGroup>& groups,
                  const std::function<plan::CoefMatrix(const plan::PlanGroup&)>& predict) {
  double total = 0.0;
  for (const auto& g : groups) total += plan::realized_value(predict(g), g);
  return groups.empty() ? 0.0 : total / groups.size();
}

}  // namespace

RiskExperimentResult run_risk_experiment(const RiskExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const sim::SimulatedCohort simulated = sim::simulate_cohort(config.sim);
  const Cohort cohort = sim::to_cohort(simulated);
  const auto samples = tasks::gen_risk_samples(cohort);
  const tasks::Split sp = tasks::split(samples, config.test_frac, config.split_seed);

  RiskExperimentResult r;
  r.n_train = sp.train.size();
  r.n_test = sp.test.size();
  const features::PercentileScaler scaler = learn::fit_scaler(sp.train);
  const learn::Dataset train = learn::make_dataset(sp.train, scaler);
  const learn::Dataset test = learn::make_dataset(sp.test, scaler);
  const learn::Dataset balanced = learn::oversample(train, config.smote_k, config.sim.seed, &r.warnings);
  const std::vector<int> y_test = labels_of(sp.test);
  r.test_positive_rate = std::accumulate(y_test.begin(), y_test.end(), 0.0) / y_test.size();

  const learn::TrainResult leap = learn::leap_train(config.leap, balanced);
  const std::vector<double> leap_scores = leap.model.predict(test);
  r.auc_leap = eval::auc(leap_scores, y_test);

  const learn::Forest forest = learn::Forest::train(config.forest, balanced.statics, balanced.labels);
  r.warnings.insert(r.warnings.end(), forest.warnings().begin(), forest.warnings().end());
  r.auc_forest = eval::auc(forest.predict(test.statics), y_test);

  const learn::LogisticModel logistic = learn::LogisticModel::train(balanced);
  r.auc_logistic = eval::auc(logistic.predict(test), y_test);

  const std::vector<double> lw = learn::heuristic_scores(learn::Heuristic::LwMisses, sp.test);
  r.auc_lw_misses = eval::auc(lw, y_test);
  r.caught = eval::doses_caught(sp.test, leap_scores);
  r.fpr_rows = eval::fpr_matched_table(lw, leap_scores, y_test);
  r.seconds = elapsed(start);
  return r;
}

PlanBenchmarkResult run_plan_benchmark(const PlanBenchmarkConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const sim::SimulatedCohort simulated = sim::simulate_cohort(config.sim);
  const Cohort cohort = sim::to_cohort(simulated);
  const auto samples = tasks::gen_plan_samples(cohort);
  const tasks::Split sp = tasks::split(samples, config.test_frac, config.split_seed);

  PlanBenchmarkResult r;
  const features::PercentileScaler scaler = learn::fit_scaler(sp.train);
  const learn::Dataset train = learn::make_dataset(sp.train, scaler, plan::kDays);
  const learn::Dataset test = learn::make_dataset(sp.test, scaler, plan::kDays);
  const learn::Dataset balanced = learn::oversample(train, config.smote_k, config.sim.seed, &r.warnings);

  const learn::TrainResult two_stage = learn::leap_train(config.leap, balanced);
  const auto train_groups = plan::make_groups(sp.train, config.group_size, config.group_seed);
  const auto test_groups = plan::make_groups(sp.test, config.group_size, config.group_seed + 1);
  r.n_train_groups = train_groups.size();
  r.n_test_groups = test_groups.size();

  const plan::DflResult dfl = plan::dfl_train(config.dfl, two_stage.model, train, train_groups);
  r.dfl_train_hard = dfl.hard_objective;
  r.dfl_train_soft = dfl.soft_objective;
  if (!dfl.warnings.empty()) {
    r.warnings.push_back(std::to_string(dfl.warnings.size()) +
                         " finite-difference fallbacks during decision-focused training");
  }

  r.mean_optimal = mean_value(test_groups, [](const plan::PlanGroup& g) { return g.truth; });
  r.mean_two_stage = mean_value(test_groups, [&](const plan::PlanGroup& g) {
    return plan::predict_coefficients(two_stage.model, test, g);
  });
  r.mean_dfl = mean_value(test_groups, [&](const plan::PlanGroup& g) {
    return plan::predict_coefficients(dfl.model, test, g);
  });
  r.mean_lw_misses = mean_value(test_groups, [&](const plan::PlanGroup& g) {
    return plan::lw_misses_coefficients(sp.test, g, 1);
  });

  // Coefficient-level AUC and location-day correlations over the test groups.
  std::vector<double> s2, sd, r_true, r2, rd;
  std::vector<int> y;
  for (const auto& g : test_groups) {
    const plan::CoefMatrix c2 = plan::predict_coefficients(two_stage.model, test, g);
    const plan::CoefMatrix cd = plan::predict_coefficients(dfl.model, test, g);
    for (std::size_t j = 0; j < g.truth.size(); ++j) {
      for (int t = 0; t < plan::kDays; ++t) {
        y.push_back(g.truth.rows[j][t] > 0.5 ? 1 : 0);
        s2.push_back(c2.rows[j][t]);
        sd.push_back(cd.rows[j][t]);
      }
    }
    const Eigen::MatrixXd a2 = plan::aggregate(g.instance, c2);
    const Eigen::MatrixXd ad = plan::aggregate(g.instance, cd);
    for (Eigen::Index k = 0; k < a2.size(); ++k) {
      r_true.push_back(g.instance.reward.data()[k]);
      r2.push_back(a2.data()[k]);
      rd.push_back(ad.data()[k]);
    }
  }
  if (!y.empty()) {
    r.auc_two_stage = eval::auc(s2, y);
    r.auc_dfl = eval::auc(sd, y);
    r.corr_two_stage = eval::prediction_correlation(r2, r_true);
    r.corr_dfl = eval::prediction_correlation(rd, r_true);
    r.corr_two_stage_gt1 = eval::prediction_correlation(r2, r_true, eval::PairFilter::TrueAboveOne);
    r.corr_dfl_gt1 = eval::prediction_correlation(rd, r_true, eval::PairFilter::TrueAboveOne);
  }
  r.seconds = elapsed(start);
  return r;
}

LcfoExperimentResult run_lcfo_experiment(const sim::SimConfig& config) {
  const Cohort cohort = sim::to_cohort(sim::simulate_cohort(config));
  const auto samples = tasks::gen_lcfo_samples(cohort);
  LcfoExperimentResult r;
  r.n_samples = samples.size();
  const std::vector<int> y = labels_of(samples);
  r.positive_rate = std::accumulate(y.begin(), y.end(), 0.0) / std::max<std::size_t>(1, y.size());
  r.auc_lw_manual = eval::auc(learn::heuristic_scores(learn::Heuristic::LwManual, samples), y);
  r.auc_lw_misses = eval::auc(learn::heuristic_scores(learn::Heuristic::LwMisses, samples), y);
  return r;
}

}  // namespace adherence::pipeline
