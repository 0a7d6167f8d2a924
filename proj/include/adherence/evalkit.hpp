#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "adherence/featurize.hpp"
#include "adherence/learn/dataset.hpp"
#include "adherence/learn/leap.hpp"
#include "adherence/tasklab.hpp"

namespace adherence::eval {

struct RocPoint {
  double threshold = 0.0;  // predict positive when score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct Roc {
  std::vector<RocPoint> points;  // from (0,0) at +inf down to (1,1)
  double auc = 0.0;
};

/// Threshold sweep over unique scores; tied scores form one trapezoid step.
Roc roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Confusion {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  double tpr() const { return tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0; }
  double fpr() const { return fp + tn ? static_cast<double>(fp) / (fp + tn) : 0.0; }
};

Confusion confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                       double threshold);

/// (model - base) / base.
double relative_improvement(double base, double model);

struct CaughtRow {
  double threshold = 0.0;
  int true_positives = 0;
  double fpr = 0.0;
  int doses_caught = 0;  // misses strictly between anchor and transition, over true positives
};

struct DosesCaughtTable {
  CaughtRow baseline;
  CaughtRow model;
  double tp_improvement = 0.0;
  double doses_improvement = 0.0;
};

/// Fixes the FPR at the lw-misses >= `baseline_threshold` operating point and
/// picks the model threshold with the most true positives at or below it.
DosesCaughtTable doses_caught(const std::vector<tasks::TaskSample>& test,
                              const std::vector<double>& model_scores, int baseline_threshold = 3);

struct FprRow {
  double tpr = 0.0;
  double fpr_a = 0.0;  // reference method
  double fpr_b = 0.0;
  double improvement = 0.0;  // (fpr_a - fpr_b) / fpr_a
};

/// Smallest FPR reaching at least the target TPR.
double fpr_at_tpr(const Roc& roc, double tpr);

std::vector<FprRow> fpr_matched_table(const std::vector<double>& scores_a,
                                      const std::vector<double>& scores_b,
                                      const std::vector<int>& labels,
                                      const std::vector<double>& tprs = {0.75, 0.8, 0.9});

struct CostReport {
  double positives = 0.0;
  double true_positives = 0.0;
  double false_positives_a = 0.0;
  double false_positives_b = 0.0;
  double workers_saved = 0.0;
  double savings = 0.0;
};

CostReport cost_projection(double n_patients, double unfavorable_rate, double tpr_target,
                           double fpr_a, double fpr_b, double patients_per_worker, double salary);

/// Neutral values for occlusion: mean call bit and per-feature medians of the
/// scaled training statics.
struct OcclusionReference {
  double call_mean = 0.0;
  std::vector<double> static_median;

  static OcclusionReference from(const learn::Dataset& train);
};

struct Attribution {
  std::vector<double> days;      // k entries
  std::vector<double> features;  // one per static feature
  double prediction = 0.0;
};

/// f(original) - f(occluded): positive means the observed value pushed the
/// prediction toward label 1. Occluding a day swaps its call bit for the
/// neutral mean and recomputes the cumulative channel.
Attribution occlusion_attribution(const learn::LeapModel& model, const tasks::TaskSample& sample,
                                  const features::PercentileScaler& scaler,
                                  const OcclusionReference& reference);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

enum class PairFilter { All, TrueAboveOne };

double prediction_correlation(const std::vector<double>& predicted, const std::vector<double>& truth,
                              PairFilter filter = PairFilter::All);

nlohmann::json to_json(const Roc& roc);

}  // namespace adherence::eval
