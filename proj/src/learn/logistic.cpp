#include "adherence/learn/logistic.hpp"

#include <cmath>

namespace adherence::learn {

Eigen::MatrixXd LogisticModel::design(const Dataset& data) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(data.size()),
                    data.statics.cols() + data.calls.cols() + data.cum.cols());
  X << data.statics, data.calls, data.cum;
  return X;
}

LogisticModel LogisticModel::train(const Dataset& data, double l2, int max_iterations) {
  if (data.size() == 0) throw InvalidInput("logistic model needs training rows");
  const Eigen::MatrixXd X = design(data);
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd Xb(n, d + 1);
  Xb << X, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = data.labels[i];

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d + 1, l2 * n);
  reg(d) = 0.0;  // bias is unpenalized
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd p = (1.0 + (-(Xb * theta)).array().exp()).inverse().matrix();
    const Eigen::VectorXd grad = Xb.transpose() * (p - y) + reg.cwiseProduct(theta);
    const Eigen::VectorXd wts = p.array() * (1.0 - p.array());
    Eigen::MatrixXd H = Xb.transpose() * wts.asDiagonal() * Xb;
    H.diagonal() += reg;
    H.diagonal().array() += 1e-9 * n;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    theta -= step;
    if (!theta.allFinite()) throw Error("logistic model diverged");
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  LogisticModel m;
  m.w_ = theta.head(d);
  m.b_ = theta(d);
  return m;
}

std::vector<double> LogisticModel::predict(const Dataset& data) const {
  const Eigen::MatrixXd X = design(data);
  if (X.cols() != w_.size()) throw InvalidInput("logistic model input has the wrong width");
  const Eigen::VectorXd z = X * w_;
  std::vector<double> out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-(z(i) + b_)));
  return out;
}

nlohmann::json LogisticModel::to_json() const {
  return {{"kind", "logistic"},
          {"weights", std::vector<double>(w_.data(), w_.data() + w_.size())},
          {"bias", b_}};
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
  if (j.at("kind") != "logistic") throw InvalidInput("artifact is not a logistic model");
  LogisticModel m;
  const auto w = j.at("weights").get<std::vector<double>>();
  m.w_ = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.b_ = j.at("bias").get<double>();
  return m;
}

}  // namespace adherence::learn
