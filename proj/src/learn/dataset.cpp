#include "adherence/learn/dataset.hpp"

namespace adherence::learn {

std::vector<double> scaled_cumulative(const tasks::TaskSample& sample) {
  const int k = sample.k();
  const int first = sample.anchor - k + 1;
  std::vector<double> out(k);
  for (int d = 0; d < k; ++d) out[d] = sample.cum_miss_seq[d] / static_cast<double>(first + d + 1);
  return out;
}

std::vector<std::vector<double>> raw_features(const std::vector<tasks::TaskSample>& samples) {
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.features);
  return rows;
}

features::PercentileScaler fit_scaler(const std::vector<tasks::TaskSample>& train) {
  return features::PercentileScaler::fit(raw_features(train));
}

Dataset make_dataset(const std::vector<tasks::TaskSample>& samples,
                     const features::PercentileScaler& scaler, int outputs) {
  if (samples.empty()) throw InvalidInput("cannot build a dataset from zero samples");
  if (outputs != 1 && outputs != 7) throw InvalidInput("dataset outputs must be 1 or 7");
  Dataset d;
  d.k = samples.front().k();
  const auto n = static_cast<Eigen::Index>(samples.size());
  d.calls.resize(n, d.k);
  d.cum.resize(n, d.k);
  d.statics.resize(n, features::kFeatureCount);
  d.targets.resize(n, outputs);
  for (Eigen::Index r = 0; r < n; ++r) {
    const tasks::TaskSample& s = samples[r];
    if (s.k() != d.k) throw InvalidInput("samples with different sequence lengths in one dataset");
    const std::vector<double> cum = scaled_cumulative(s);
    for (int t = 0; t < d.k; ++t) {
      d.calls(r, t) = s.call_seq[t];
      d.cum(r, t) = cum[t];
    }
    const std::vector<double> scaled = scaler.transform(s.features);
    for (int f = 0; f < features::kFeatureCount; ++f) d.statics(r, f) = scaled[f];
    if (outputs == 1) {
      d.targets(r, 0) = s.label;
      d.labels.push_back(s.label);
    } else {
      if (s.coef.size() != 7) throw InvalidInput("planning sample without 7 coefficients");
      int any = 0;
      for (int t = 0; t < 7; ++t) {
        d.targets(r, t) = s.coef[t];
        any |= s.coef[t];
      }
      d.labels.push_back(any);
    }
    d.source.push_back(static_cast<std::size_t>(r));
  }
  return d;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset d;
  d.k = data.k;
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.calls.resize(n, data.calls.cols());
  d.cum.resize(n, data.cum.cols());
  d.statics.resize(n, data.statics.cols());
  d.targets.resize(n, data.targets.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    d.calls.row(r) = data.calls.row(src);
    d.cum.row(r) = data.cum.row(src);
    d.statics.row(r) = data.statics.row(src);
    d.targets.row(r) = data.targets.row(src);
    d.labels.push_back(data.labels[rows[r]]);
    d.source.push_back(data.source[rows[r]]);
  }
  return d;
}

Dataset oversample(const Dataset& data, int k_neighbors, std::uint64_t seed,
                   std::vector<std::string>* warnings) {
  std::vector<std::vector<double>> rows(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto row = data.statics.row(static_cast<Eigen::Index>(r));
    rows[r].resize(row.size());
    for (Eigen::Index f = 0; f < row.size(); ++f) rows[r][f] = row(f);
  }
  features::SmoteResult sm = features::smote(rows, data.labels, k_neighbors, seed);
  if (warnings) warnings->insert(warnings->end(), sm.warnings.begin(), sm.warnings.end());
  Dataset out = subset(data, sm.parent);
  for (std::size_t r = data.size(); r < sm.rows.size(); ++r) {
    for (std::size_t f = 0; f < sm.rows[r].size(); ++f) {
      out.statics(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = sm.rows[r][f];
    }
    out.labels[r] = sm.labels[r];
  }
  return out;
}

}  // namespace adherence::learn
