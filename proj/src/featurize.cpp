#include "adherence/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace adherence::features {

namespace {

FeatureSchema make_v1() {
  FeatureSchema s;
  s.version = "v1";
  s.features = {{"weight_band"}, {"age_band"}, {"gender"}, {"center_id", true},
                {"mean_call_minute"}, {"var_call_minute"}, {"mean_call_hour"}, {"var_call_hour"}};
  for (const char* variant : {"all_events", "calls_only", "unique_calls"}) {
    for (const char* stat : {"n_events", "mean_per_day", "max_per_day", "var_per_day",
                             "mean_gap_days", "var_gap_days", "max_gap_days"}) {
      s.features.push_back({std::string(variant) + "." + stat});
    }
  }
  return s;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= v.size();
  return m;
}

void append_count_stats(std::vector<double>& out, const std::vector<double>& per_day) {
  const double k = static_cast<double>(per_day.size());
  const Moments daily = moments(per_day);
  out.push_back(std::accumulate(per_day.begin(), per_day.end(), 0.0));
  out.push_back(daily.mean);
  out.push_back(*std::max_element(per_day.begin(), per_day.end()));
  out.push_back(daily.var);

  std::vector<double> gaps;
  int prev = -1;
  for (std::size_t d = 0; d < per_day.size(); ++d) {
    if (per_day[d] <= 0) continue;
    if (prev >= 0) gaps.push_back(static_cast<double>(static_cast<int>(d) - prev));
    prev = static_cast<int>(d);
  }
  if (gaps.empty()) {
    out.insert(out.end(), {k, k, k});
  } else {
    const Moments g = moments(gaps);
    out.push_back(g.mean);
    out.push_back(g.var);
    out.push_back(*std::max_element(gaps.begin(), gaps.end()));
  }
}

}  // namespace

const FeatureSchema& FeatureSchema::v1() {
  static const FeatureSchema schema = make_v1();
  return schema;
}

int FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return static_cast<int>(i);
  }
  throw InvalidInput("unknown feature '" + std::string(name) + "'");
}

double category_code(std::string_view id) {
  std::uint32_t h = 2166136261u;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 16777619u;
  }
  return static_cast<double>(h);
}

std::vector<double> static_features(const AdherenceCalendar& calendar, const PatientRecord& patient,
                                    int first_day, int last_day) {
  if (first_day < 0 || last_day >= calendar.size() || first_day > last_day) {
    throw OutOfRange("feature window [" + std::to_string(first_day) + ", " +
                     std::to_string(last_day) + "] outside calendar of " + calendar.patient_id());
  }
  std::vector<double> out;
  out.reserve(kFeatureCount);
  out.push_back(patient.weight_band);
  out.push_back(patient.age_band);
  out.push_back(static_cast<double>(patient.gender));
  out.push_back(category_code(patient.center_id));

  const auto k = static_cast<std::size_t>(last_day - first_day + 1);
  std::vector<double> all(k, 0.0), calls(k, 0.0), unique(k, 0.0);
  std::vector<double> minutes, hours;
  for (std::size_t i = 0; i < k; ++i) {
    const int day = first_day + static_cast<int>(i);
    const auto stamps = calendar.calls(day);
    std::set<std::string_view> phones;
    for (const CallStamp& c : stamps) {
      minutes.push_back(c.timestamp.minute());
      hours.push_back(c.timestamp.hour());
      phones.insert(c.phone);
    }
    calls[i] = static_cast<double>(stamps.size());
    unique[i] = static_cast<double>(phones.size());
    all[i] = calls[i] + (calendar.status(day) == DayStatus::TakenManual ? 1.0 : 0.0);
  }
  if (minutes.empty()) {
    out.insert(out.end(), {-1.0, -1.0, -1.0, -1.0});
  } else {
    const Moments m = moments(minutes);
    const Moments h = moments(hours);
    out.insert(out.end(), {m.mean, m.var, h.mean, h.var});
  }
  append_count_stats(out, all);
  append_count_stats(out, calls);
  append_count_stats(out, unique);
  return out;
}

PercentileScaler PercentileScaler::fit(const std::vector<std::vector<double>>& rows,
                                       const FeatureSchema& schema) {
  if (rows.empty()) throw InvalidInput("cannot fit a percentile scaler on zero rows");
  const std::size_t n_features = schema.size();
  PercentileScaler s;
  s.schema_version_ = schema.version;
  s.categorical_.resize(n_features);
  s.sorted_.resize(n_features);
  s.ranks_.resize(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    s.categorical_[f] = schema.features[f].categorical;
    if (s.categorical_[f]) {
      std::map<double, int> counts;
      for (const auto& r : rows) ++counts[r.at(f)];
      std::vector<std::pair<double, int>> by_freq(counts.begin(), counts.end());
      std::stable_sort(by_freq.begin(), by_freq.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      for (std::size_t i = 0; i < by_freq.size(); ++i) {
        s.ranks_[f].push_back({by_freq[i].first, static_cast<double>(i)});
      }
      std::sort(s.ranks_[f].begin(), s.ranks_[f].end());
    }
  }
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& col = s.sorted_[f];
    col.reserve(rows.size());
    for (const auto& r : rows) {
      if (r.size() != n_features) throw InvalidInput("feature row has wrong width");
      col.push_back(s.encode(f, r[f]));
    }
    std::sort(col.begin(), col.end());
  }
  return s;
}

double PercentileScaler::encode(std::size_t feature, double raw) const {
  if (!categorical_[feature]) return raw;
  const auto& ranks = ranks_[feature];
  const auto it = std::lower_bound(ranks.begin(), ranks.end(), std::make_pair(raw, -1.0));
  if (it != ranks.end() && it->first == raw) return it->second;
  return static_cast<double>(ranks.size());  // unseen categories rank last
}

double PercentileScaler::transform_one(std::size_t feature, double raw) const {
  const auto& col = sorted_[feature];
  const double v = encode(feature, raw);
  const auto lo = std::lower_bound(col.begin(), col.end(), v);
  const auto hi = std::upper_bound(lo, col.end(), v);
  return (static_cast<double>(lo - col.begin()) + 0.5 * static_cast<double>(hi - lo)) / col.size();
}

std::vector<double> PercentileScaler::transform(const std::vector<double>& raw) const {
  if (!fitted()) throw InvalidInput("percentile scaler used before fit");
  if (raw.size() != sorted_.size()) throw InvalidInput("feature row has wrong width");
  std::vector<double> out(raw.size());
  for (std::size_t f = 0; f < raw.size(); ++f) out[f] = transform_one(f, raw[f]);
  return out;
}

nlohmann::json PercentileScaler::to_json() const {
  nlohmann::json j;
  j["schema_version"] = schema_version_;
  j["features"] = nlohmann::json::array();
  const FeatureSchema& schema = FeatureSchema::v1();
  for (std::size_t f = 0; f < sorted_.size(); ++f) {
    nlohmann::json col;
    col["name"] = f < schema.size() ? schema.features[f].name : std::to_string(f);
    col["categorical"] = static_cast<bool>(categorical_[f]);
    col["sorted"] = sorted_[f];
    if (categorical_[f]) col["ranks"] = ranks_[f];
    j["features"].push_back(std::move(col));
  }
  return j;
}

PercentileScaler PercentileScaler::from_json(const nlohmann::json& j) {
  PercentileScaler s;
  s.schema_version_ = j.at("schema_version").get<std::string>();
  for (const auto& col : j.at("features")) {
    s.categorical_.push_back(col.at("categorical").get<bool>());
    s.sorted_.push_back(col.at("sorted").get<std::vector<double>>());
    if (s.sorted_.back().empty()) throw InvalidInput("scaler artifact has an empty feature column");
    if (s.categorical_.back()) {
      s.ranks_.push_back(col.at("ranks").get<std::vector<std::pair<double, double>>>());
    } else {
      s.ranks_.emplace_back();
    }
  }
  return s;
}

SmoteResult smote(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                  int k_neighbors, std::uint64_t seed) {
  if (rows.size() != labels.size()) throw InvalidInput("smote: rows and labels differ in length");
  if (k_neighbors < 1) throw InvalidInput("smote: k_neighbors must be >= 1");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidInput("smote: labels must be 0/1");
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  const bool minority_is_pos = pos.size() <= neg.size();
  const std::vector<std::size_t>& minority = minority_is_pos ? pos : neg;
  const std::size_t majority_size = minority_is_pos ? neg.size() : pos.size();
  if (minority.empty()) throw InvalidInput("smote: minority class is empty");

  SmoteResult out;
  out.rows = rows;
  out.labels = labels;
  out.parent.resize(rows.size());
  std::iota(out.parent.begin(), out.parent.end(), std::size_t{0});
  out.neighbor = out.parent;

  const std::size_t needed = majority_size - minority.size();
  if (needed == 0) return out;

  std::size_t k = static_cast<std::size_t>(k_neighbors);
  if (minority.size() - 1 < k) {
    k = minority.size() - 1;
    out.warnings.push_back("smote: only " + std::to_string(minority.size()) +
                           " minority rows; k_neighbors reduced to " + std::to_string(k));
  }

  // k nearest minority neighbours of each minority row, ties by index.
  std::vector<std::vector<std::size_t>> knn(minority.size());
  if (k > 0) {
    std::vector<std::pair<double, std::size_t>> dist(minority.size());
    for (std::size_t a = 0; a < minority.size(); ++a) {
      const auto& xa = rows[minority[a]];
      for (std::size_t b = 0; b < minority.size(); ++b) {
        const auto& xb = rows[minority[b]];
        double d2 = 0.0;
        for (std::size_t f = 0; f < xa.size(); ++f) d2 += (xa[f] - xb[f]) * (xa[f] - xb[f]);
        dist[b] = {a == b ? std::numeric_limits<double>::infinity() : d2, b};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t n = 0; n < k; ++n) knn[a].push_back(dist[n].second);
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_seed(0, minority.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int minority_label = minority_is_pos ? 1 : 0;
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = pick_seed(rng);
    std::size_t b = a;
    if (k > 0) b = knn[a][std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)];
    const double lambda = unit(rng);
    const auto& xa = rows[minority[a]];
    const auto& xb = rows[minority[b]];
    std::vector<double> synth(xa.size());
    for (std::size_t f = 0; f < xa.size(); ++f) synth[f] = xa[f] + lambda * (xb[f] - xa[f]);
    out.rows.push_back(std::move(synth));
    out.labels.push_back(minority_label);
    out.parent.push_back(minority[a]);
    out.neighbor.push_back(minority[b]);
  }
  return out;
}

}  // namespace adherence::features
