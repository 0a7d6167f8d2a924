#include "adherence/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adherence/learn/heuristics.hpp"

namespace adherence::eval {

namespace {

void check_binary(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw InvalidInput("scores and labels differ in length");
  int pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidInput("labels must be 0/1");
    pos += y;
  }
  if (pos == 0 || pos == static_cast<int>(labels.size())) {
    throw InvalidInput("ROC needs at least one positive and one negative label");
  }
}

}  // namespace

Roc roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double P = std::accumulate(labels.begin(), labels.end(), 0.0);
  const double N = static_cast<double>(labels.size()) - P;

  Roc roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  double tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double thr = scores[order[k]];
    while (k < order.size() && scores[order[k]] == thr) {
      (labels[order[k]] ? tp : fp) += 1.0;
      ++k;
    }
    roc.points.push_back({thr, fp / N, tp / P});
  }
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    const RocPoint& a = roc.points[k - 1];
    const RocPoint& b = roc.points[k];
    roc.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return roc;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  return roc_auc(scores, labels).auc;
}

Confusion confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                       double threshold) {
  if (scores.size() != labels.size()) throw InvalidInput("scores and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      (predicted ? c.tp : c.fn)++;
    } else {
      (predicted ? c.fp : c.tn)++;
    }
  }
  return c;
}

double relative_improvement(double base, double model) {
  if (base == 0.0) throw InvalidInput("relative improvement over a zero baseline");
  return (model - base) / base;
}

DosesCaughtTable doses_caught(const std::vector<tasks::TaskSample>& test,
                              const std::vector<double>& model_scores, int baseline_threshold) {
  if (test.size() != model_scores.size()) throw InvalidInput("scores do not match the test samples");
  std::vector<int> labels;
  for (const auto& s : test) labels.push_back(s.label);
  const std::vector<double> base_scores = learn::heuristic_scores(learn::Heuristic::LwMisses, test);
  int negatives = 0;
  for (int y : labels) negatives += y == 0 ? 1 : 0;
  if (negatives == 0) throw InvalidInput("FPR is undefined without negative samples");

  const auto row_at = [&](const std::vector<double>& scores, double thr) {
    CaughtRow r;
    r.threshold = thr;
    const Confusion c = confusion_at(scores, labels, thr);
    r.true_positives = c.tp;
    r.fpr = c.fpr();
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (labels[i] && scores[i] >= thr) r.doses_caught += test[i].doses_before_transition;
    }
    return r;
  };

  DosesCaughtTable t;
  t.baseline = row_at(base_scores, baseline_threshold);
  std::vector<double> thresholds = model_scores;
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  bool found = false;
  for (double thr : thresholds) {
    const CaughtRow r = row_at(model_scores, thr);
    if (r.fpr > t.baseline.fpr) continue;
    if (!found || r.true_positives > t.model.true_positives) {
      t.model = r;
      found = true;
    }
  }
  if (!found) throw InvalidInput("no model threshold reaches the baseline FPR");
  if (t.baseline.true_positives > 0) {
    t.tp_improvement = relative_improvement(t.baseline.true_positives, t.model.true_positives);
  }
  if (t.baseline.doses_caught > 0) {
    t.doses_improvement = relative_improvement(t.baseline.doses_caught, t.model.doses_caught);
  }
  return t;
}

double fpr_at_tpr(const Roc& roc, double tpr) {
  if (!(tpr > 0.0 && tpr <= 1.0)) throw InvalidInput("target TPR must be in (0, 1]");
  for (const RocPoint& p : roc.points) {
    if (p.tpr >= tpr - 1e-12) return p.fpr;
  }
  throw InvalidInput("target TPR is unreachable");
}

std::vector<FprRow> fpr_matched_table(const std::vector<double>& scores_a,
                                      const std::vector<double>& scores_b,
                                      const std::vector<int>& labels, const std::vector<double>& tprs) {
  const Roc ra = roc_auc(scores_a, labels);
  const Roc rb = roc_auc(scores_b, labels);
  std::vector<FprRow> rows;
  for (double tpr : tprs) {
    FprRow r;
    r.tpr = tpr;
    r.fpr_a = fpr_at_tpr(ra, tpr);
    r.fpr_b = fpr_at_tpr(rb, tpr);
    r.improvement = r.fpr_a > 0.0 ? (r.fpr_a - r.fpr_b) / r.fpr_a : 0.0;
    rows.push_back(r);
  }
  return rows;
}

CostReport cost_projection(double n_patients, double unfavorable_rate, double tpr_target,
                           double fpr_a, double fpr_b, double patients_per_worker, double salary) {
  for (double rate : {unfavorable_rate, tpr_target, fpr_a, fpr_b}) {
    if (rate < 0.0 || rate > 1.0) throw InvalidInput("cost projection rates must be in [0, 1]");
  }
  if (!(patients_per_worker > 0.0)) throw InvalidInput("patients per worker must be positive");
  CostReport r;
  r.positives = n_patients * unfavorable_rate;
  r.true_positives = tpr_target * r.positives;
  r.false_positives_a = fpr_a * (n_patients - r.positives);
  r.false_positives_b = fpr_b * (n_patients - r.positives);
  r.workers_saved = (r.false_positives_a - r.false_positives_b) / patients_per_worker;
  r.savings = r.workers_saved * salary;
  return r;
}

OcclusionReference OcclusionReference::from(const learn::Dataset& train) {
  if (train.size() == 0) throw InvalidInput("occlusion reference needs training rows");
  OcclusionReference ref;
  ref.call_mean = train.calls.mean();
  for (Eigen::Index f = 0; f < train.statics.cols(); ++f) {
    std::vector<double> col(train.statics.col(f).data(), train.statics.col(f).data() + train.statics.rows());
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    ref.static_median.push_back(n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]));
  }
  return ref;
}

Attribution occlusion_attribution(const learn::LeapModel& model, const tasks::TaskSample& sample,
                                  const features::PercentileScaler& scaler,
                                  const OcclusionReference& reference) {
  const int k = sample.k();
  const int first = sample.anchor - k + 1;
  std::vector<double> calls(sample.call_seq.begin(), sample.call_seq.end());
  std::vector<double> cum(sample.cum_miss_seq.begin(), sample.cum_miss_seq.end());
  const std::vector<double> statics = scaler.transform(sample.features);
  if (static_cast<int>(reference.static_median.size()) != model.n_static()) {
    throw InvalidInput("occlusion reference does not match the model");
  }

  const auto run = [&](const std::vector<double>& c, const std::vector<double>& m,
                       const std::vector<double>& s) {
    learn::LeapInputs in;
    in.calls.resize(1, k);
    in.cum.resize(1, k);
    in.statics.resize(1, static_cast<Eigen::Index>(s.size()));
    for (int t = 0; t < k; ++t) {
      in.calls(0, t) = c[t];
      in.cum(0, t) = m[t] / static_cast<double>(first + t + 1);
    }
    for (std::size_t f = 0; f < s.size(); ++f) in.statics(0, static_cast<Eigen::Index>(f)) = s[f];
    return model.forward(in)(0, 0);
  };

  Attribution a;
  a.prediction = run(calls, cum, statics);
  for (int d = 0; d < k; ++d) {
    std::vector<double> c = calls, m = cum;
    c[d] = reference.call_mean;
    // A miss counts 1 - bit toward the running total from day d on.
    const double shift = (1.0 - reference.call_mean) - (1.0 - calls[d]);
    for (int t = d; t < k; ++t) m[t] += shift;
    a.days.push_back(a.prediction - run(c, m, statics));
  }
  for (std::size_t f = 0; f < statics.size(); ++f) {
    std::vector<double> s = statics;
    s[f] = reference.static_median[f];
    a.features.push_back(a.prediction - run(calls, cum, s));
  }
  return a;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidInput("pearson: vectors differ in length");
  if (a.size() < 2) throw InvalidInput("pearson needs at least 2 pairs");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw InvalidInput("pearson: zero variance");
  return sab / std::sqrt(saa * sbb);
}

double prediction_correlation(const std::vector<double>& predicted, const std::vector<double>& truth,
                              PairFilter filter) {
  if (predicted.size() != truth.size()) throw InvalidInput("prediction pairs differ in length");
  std::vector<double> p, t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (filter == PairFilter::TrueAboveOne && !(truth[i] > 1.0)) continue;
    p.push_back(predicted[i]);
    t.push_back(truth[i]);
  }
  return pearson(p, t);
}

nlohmann::json to_json(const Roc& roc) {
  nlohmann::json pts = nlohmann::json::array();
  for (const RocPoint& p : roc.points) {
    pts.push_back({{"threshold", std::isinf(p.threshold) ? nlohmann::json("inf") : nlohmann::json(p.threshold)},
                   {"fpr", p.fpr},
                   {"tpr", p.tpr}});
  }
  return {{"auc", roc.auc}, {"points", pts}};
}

}  // namespace adherence::eval
