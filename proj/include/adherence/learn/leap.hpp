#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adherence/learn/dataset.hpp"

namespace adherence::learn {

struct LeapConfig {
  int lstm_hidden = 64;
  int dense_in_units = 100;
  int penult_units = 16;
  int batch = 128;
  int epochs = 20;
  std::string optimizer = "adam";  // "adam" or "sgd"
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;

  static LeapConfig risk() { return {}; }
  static LeapConfig outcome() { return {64, 48, 4}; }
  static LeapConfig lcfo() { return {200, 1000, 16}; }

  void validate() const;
};

/// Batch inputs, one row per sample.
struct LeapInputs {
  Eigen::MatrixXd calls;    // B x k
  Eigen::MatrixXd cum;      // B x k
  Eigen::MatrixXd statics;  // B x S

  Eigen::Index batch() const { return calls.rows(); }
};

LeapInputs gather(const Dataset& data, const std::vector<std::size_t>& rows);
LeapInputs all_inputs(const Dataset& data);

/// Two-channel LSTM over the input week, a ReLU dense layer over the static
/// features, their concatenation into a ReLU penultimate layer, and a sigmoid
/// head with one unit per output.
class LeapModel {
 public:
  struct Tape;

  LeapModel() = default;
  LeapModel(const LeapConfig& config, int k, int n_static = 29, int outputs = 1);

  /// Glorot-uniform weights, zero biases except forget gate = 1.
  void init(std::uint64_t seed);
  void set_zero() { theta_.setZero(); }

  const LeapConfig& config() const { return config_; }
  int k() const { return k_; }
  int n_static() const { return n_static_; }
  int outputs() const { return outputs_; }
  Eigen::Index n_params() const { return theta_.size(); }
  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  /// Probabilities, B x outputs.
  Eigen::MatrixXd forward(const LeapInputs& in) const;
  /// Logits, B x outputs; records activations for backward() when `tape` set.
  Eigen::MatrixXd logits(const LeapInputs& in, Tape* tape = nullptr) const;
  /// Parameter gradient given dL/dlogits (B x outputs).
  Eigen::VectorXd backward(const Tape& tape, const Eigen::MatrixXd& dlogits) const;

  /// Mean binary cross-entropy over all entries; fills `grad` when given.
  double bce(const LeapInputs& in, const Eigen::MatrixXd& targets, Eigen::VectorXd* grad = nullptr) const;

  /// Predicted probability of output 0 (or every output) per dataset row.
  std::vector<double> predict(const Dataset& data) const;
  Eigen::MatrixXd predict_all(const Dataset& data) const;

  /// Single-sample inference on raw sequences and scaled statics.
  double predict_one(const std::vector<int>& call_seq, const std::vector<double>& cum_scaled,
                     const std::vector<double>& statics_scaled) const;

  nlohmann::json to_json() const;
  static LeapModel from_json(const nlohmann::json& j);

  /// Zeroes the static dense layer so the model ignores static inputs.
  void zero_static_path();

 private:
  LeapConfig config_;
  int k_ = 0;
  int n_static_ = 29;
  int outputs_ = 1;
  Eigen::VectorXd theta_;
};

struct LeapModel::Tape {
  int B = 0;
  std::vector<Eigen::MatrixXd> x;                      // k of 2 x B
  std::vector<Eigen::MatrixXd> i, f, g, o, c, tanh_c;  // k of H x B
  std::vector<Eigen::MatrixXd> h;                      // k+1 of H x B, h[0] = 0
  Eigen::MatrixXd statics;                             // S x B
  Eigen::MatrixXd s_pre, s_act;                        // D x B
  Eigen::MatrixXd z;                                   // (H + D) x B
  Eigen::MatrixXd p_pre, p_act;                        // P x B
};

struct TrainResult {
  LeapModel model;
  std::vector<double> loss_trace;  // [initial, after epoch 1, ...] on the full training set
};

/// Mini-batch training on mean binary cross-entropy. Deterministic by seed;
/// throws on a non-finite loss.
TrainResult leap_train(const LeapConfig& config, const Dataset& train,
                       const LeapModel* warm_start = nullptr);

/// Adaptive-moment optimizer over a flat parameter vector.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, b1_, b2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

struct GradientCheck {
  double max_relative_error = 0.0;
  Eigen::Index worst_param = -1;
  bool all_finite = true;
};

/// Analytic BCE gradient against central differences for every parameter.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheck gradient_check(const LeapModel& model, const LeapInputs& in,
                             const Eigen::MatrixXd& targets, double eps = 1e-5);

}  // namespace adherence::learn
