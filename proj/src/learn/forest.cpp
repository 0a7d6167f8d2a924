#include "adherence/learn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adherence/core.hpp"
#include "adherence/json_io.hpp"

namespace adherence::learn {

namespace {

struct Builder {
  const Eigen::MatrixXd& X;
  const std::vector<int>& y;
  std::optional<int> max_depth;
  int mtry;
  std::mt19937_64 rng;
  std::vector<TreeNode> nodes;

  struct Best {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child Gini
  };

  static double gini(double pos, double n) {
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  // Best threshold on one feature; returns false when every value is equal.
  bool scan(int f, std::vector<int>& idx, Best& best) {
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
    const double n = static_cast<double>(idx.size());
    double total_pos = 0;
    for (int i : idx) total_pos += y[i];
    double left_pos = 0;
    bool any = false;
    for (std::size_t s = 1; s < idx.size(); ++s) {
      left_pos += y[idx[s - 1]];
      const double lo = X(idx[s - 1], f);
      const double hi = X(idx[s], f);
      if (!(lo < hi)) continue;
      any = true;
      const double nl = static_cast<double>(s);
      const double nr = n - nl;
      const double imp = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n;
      if (best.feature < 0 || imp < best.impurity) {
        best.feature = f;
        best.threshold = 0.5 * (lo + hi);
        if (best.threshold >= hi) best.threshold = lo;  // midpoint rounding guard
        best.impurity = imp;
      }
    }
    return any;
  }

  int grow(std::vector<int> idx, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    double pos = 0;
    for (int i : idx) pos += y[i];
    const double n = static_cast<double>(idx.size());
    nodes[id].value = pos / n;
    const double parent = gini(pos, n);
    if (parent == 0.0 || idx.size() < 2 || (max_depth && depth >= *max_depth)) return id;

    const int d = static_cast<int>(X.cols());
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Best best;
    int tried = 0;
    for (int f : order) {
      // Keep drawing past mtry only while no usable split has been found.
      if (tried >= mtry && best.feature >= 0 && best.impurity < parent) break;
      scan(f, idx, best);
      ++tried;
    }
    if (best.feature < 0 || !(best.impurity < parent)) return id;

    std::vector<int> left, right;
    for (int i : idx) (X(i, best.feature) <= best.threshold ? left : right).push_back(i);
    nodes[id].feature = best.feature;
    nodes[id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    nodes[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    nodes[id].right = r;
    return id;
  }
};

double tree_predict(const std::vector<TreeNode>& nodes, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int at = 0;
  while (nodes[at].feature >= 0) {
    at = x(nodes[at].feature) <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
  }
  return nodes[at].value;
}

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1) throw InvalidInput("forest needs n_trees >= 1");
  if (max_depth && *max_depth < 0) throw InvalidInput("forest max_depth must be >= 0");
}

Forest Forest::train(const ForestConfig& config, const Eigen::MatrixXd& X, const std::vector<int>& y) {
  config.validate();
  if (X.rows() == 0 || static_cast<std::size_t>(X.rows()) != y.size()) {
    throw InvalidInput("forest training data is empty or mislabeled");
  }
  Forest f;
  f.config_ = config;
  f.n_features_ = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  const int pos = std::accumulate(y.begin(), y.end(), 0);
  if (pos == 0 || pos == n) {
    f.warnings_.push_back("forest: single-class training labels; model is constant");
    TreeNode leaf;
    leaf.value = pos == 0 ? 0.0 : 1.0;
    f.trees_.push_back({leaf});
    return f;
  }
  const int mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(X.cols()))));
  for (int t = 0; t < config.n_trees; ++t) {
    Builder b{X, y, config.max_depth, mtry,
              std::mt19937_64(config.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t)),
              {}};
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> boot(n);
    for (int& i : boot) i = pick(b.rng);
    b.grow(std::move(boot), 0);
    f.trees_.push_back(std::move(b.nodes));
  }
  return f;
}

double Forest::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != n_features_) throw InvalidInput("forest input has the wrong width");
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree_predict(tree, x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict(const Eigen::MatrixXd& X) const {
  std::vector<double> out;
  out.reserve(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out.push_back(predict_one(X.row(r)));
  return out;
}

nlohmann::json Forest::to_json() const {
  nlohmann::json j;
  j["kind"] = "forest";
  j["config"] = {{"n_trees", config_.n_trees}, {"max_depth", config_.max_depth}, {"seed", config_.seed}};
  j["n_features"] = n_features_;
  j["trees"] = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array();
    for (const TreeNode& n : tree) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    j["trees"].push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                          {"right", right}, {"value", value}});
  }
  return j;
}

Forest Forest::from_json(const nlohmann::json& j) {
  if (j.at("kind") != "forest") throw InvalidInput("artifact is not a forest model");
  Forest f;
  const auto& c = j.at("config");
  f.config_.n_trees = c.at("n_trees").get<int>();
  f.config_.max_depth = c.at("max_depth").get<std::optional<int>>();
  f.config_.seed = c.at("seed").get<std::uint64_t>();
  f.n_features_ = j.at("n_features").get<int>();
  for (const auto& t : j.at("trees")) {
    const auto feature = t.at("feature").get<std::vector<int>>();
    const auto threshold = t.at("threshold").get<std::vector<double>>();
    const auto left = t.at("left").get<std::vector<int>>();
    const auto right = t.at("right").get<std::vector<int>>();
    const auto value = t.at("value").get<std::vector<double>>();
    std::vector<TreeNode> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
    }
    f.trees_.push_back(std::move(nodes));
  }
  return f;
}

}  // namespace adherence::learn
