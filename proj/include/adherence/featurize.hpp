#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adherence/core.hpp"

namespace adherence::features {

inline constexpr int kFeatureCount = 29;

struct FeatureSpec {
  std::string name;
  bool categorical = false;
};

/// Ordered static feature list: 4 demographics, 4 call-timing moments, then
/// the same 7 count/gap statistics for all events, calls only (manual doses
/// ignored), and unique calls (at most one per phone per day).
struct FeatureSchema {
  std::string version;
  std::vector<FeatureSpec> features;

  static const FeatureSchema& v1();
  int index_of(std::string_view name) const;
  std::size_t size() const { return features.size(); }
};

/// Stable numeric code for an opaque categorical id (FNV-1a, exact in double).
double category_code(std::string_view id);

/// Raw (unscaled) static features over days [first_day, last_day].
///
/// Timing moments use call timestamps only and are -1 when the window has no
/// call. Gap statistics are over distances between consecutive event days and
/// equal the window length when fewer than two event days exist.
std::vector<double> static_features(const AdherenceCalendar& calendar, const PatientRecord& patient,
                                    int first_day, int last_day);

/// Per-feature empirical CDF fitted on training rows. Categorical features are
/// first replaced by their training frequency rank (most frequent = 0).
class PercentileScaler {
 public:
  PercentileScaler() = default;

  static PercentileScaler fit(const std::vector<std::vector<double>>& rows,
                              const FeatureSchema& schema = FeatureSchema::v1());

  bool fitted() const { return !sorted_.empty(); }
  /// (#train < v + 0.5 * #train == v) / n, per feature.
  std::vector<double> transform(const std::vector<double>& raw) const;
  double transform_one(std::size_t feature, double raw) const;

  nlohmann::json to_json() const;
  static PercentileScaler from_json(const nlohmann::json& j);

  const std::string& schema_version() const { return schema_version_; }

 private:
  double encode(std::size_t feature, double raw) const;

  std::string schema_version_;
  std::vector<bool> categorical_;
  std::vector<std::vector<double>> sorted_;
  // For categorical features: (code, rank) sorted by code.
  std::vector<std::vector<std::pair<double, double>>> ranks_;
};

struct SmoteResult {
  std::vector<std::vector<double>> rows;  // originals first, unchanged, then synthetics
  std::vector<int> labels;
  std::vector<std::size_t> parent;    // seed row of each output row (itself for originals)
  std::vector<std::size_t> neighbor;  // interpolation partner (itself for originals)
  std::vector<std::string> warnings;
};

/// Oversamples the minority class to a 1:1 balance. Each synthetic row is
/// x + u * (x_nn - x) with u ~ U(0,1) and x_nn one of the k nearest minority
/// neighbours of x.
SmoteResult smote(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                  int k_neighbors, std::uint64_t seed);

}  // namespace adherence::features
