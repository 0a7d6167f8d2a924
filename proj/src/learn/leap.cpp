#include "adherence/learn/leap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace adherence::learn {

namespace {

using Mat = Eigen::MatrixXd;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;

// Offsets of each block inside the flat parameter vector.
struct Layout {
  Eigen::Index H, S, D, P, O;
  Eigen::Index W, U, b, Ws, bs, Wp, bp, Wo, bo, total;

  Layout(int hidden, int n_static, int dense, int penult, int outputs)
      : H(hidden), S(n_static), D(dense), P(penult), O(outputs) {
    Eigen::Index at = 0;
    const auto take = [&at](Eigen::Index n) {
      const Eigen::Index here = at;
      at += n;
      return here;
    };
    W = take(4 * H * 2);
    U = take(4 * H * H);
    b = take(4 * H);
    Ws = take(D * S);
    bs = take(D);
    Wp = take(P * (H + D));
    bp = take(P);
    Wo = take(O * P);
    bo = take(O);
    total = at;
  }
};

Layout layout_of(const LeapConfig& c, int n_static, int outputs) {
  return Layout(c.lstm_hidden, n_static, c.dense_in_units, c.penult_units, outputs);
}

Mat sigmoid(const Mat& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

// Row-major nested lists for JSON.
nlohmann::json matrix_json(const CMapM& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

void matrix_from_json(const nlohmann::json& j, MapM m, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m.rows()) {
    throw InvalidInput(std::string("LEAP artifact: bad shape for ") + name);
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
      throw InvalidInput(std::string("LEAP artifact: bad shape for ") + name);
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[c];
  }
}

}  // namespace

void LeapConfig::validate() const {
  if (lstm_hidden < 1 || dense_in_units < 1 || penult_units < 1 || batch < 1 || epochs < 0) {
    throw InvalidInput("LEAP sizes must be positive");
  }
  if (optimizer != "adam" && optimizer != "sgd") throw InvalidInput("unknown optimizer " + optimizer);
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
}

LeapInputs gather(const Dataset& data, const std::vector<std::size_t>& rows) {
  LeapInputs in;
  const auto n = static_cast<Eigen::Index>(rows.size());
  in.calls.resize(n, data.calls.cols());
  in.cum.resize(n, data.cum.cols());
  in.statics.resize(n, data.statics.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    in.calls.row(r) = data.calls.row(src);
    in.cum.row(r) = data.cum.row(src);
    in.statics.row(r) = data.statics.row(src);
  }
  return in;
}

LeapInputs all_inputs(const Dataset& data) { return {data.calls, data.cum, data.statics}; }

LeapModel::LeapModel(const LeapConfig& config, int k, int n_static, int outputs)
    : config_(config), k_(k), n_static_(n_static), outputs_(outputs) {
  config.validate();
  if (k < 1 || n_static < 1 || outputs < 1) throw InvalidInput("LEAP shapes must be positive");
  theta_ = Eigen::VectorXd::Zero(layout_of(config_, n_static_, outputs_).total);
}

void LeapModel::init(std::uint64_t seed) {
  const Layout L = layout_of(config_, n_static_, outputs_);
  std::mt19937_64 rng(seed);
  const auto glorot = [&](Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < rows * cols; ++i) theta_(offset + i) = u(rng);
  };
  theta_.setZero();
  glorot(L.W, 4 * L.H, 2);
  glorot(L.U, 4 * L.H, L.H);
  glorot(L.Ws, L.D, L.S);
  glorot(L.Wp, L.P, L.H + L.D);
  glorot(L.Wo, L.O, L.P);
  theta_.segment(L.b + L.H, L.H).setOnes();  // forget gate
}

void LeapModel::zero_static_path() {
  const Layout L = layout_of(config_, n_static_, outputs_);
  theta_.segment(L.Ws, L.D * L.S).setZero();
  theta_.segment(L.bs, L.D).setZero();
}

Mat LeapModel::logits(const LeapInputs& in, Tape* tape) const {
  const Layout L = layout_of(config_, n_static_, outputs_);
  const Eigen::Index B = in.batch();
  if (in.calls.cols() != k_ || in.cum.cols() != k_ || in.cum.rows() != B) {
    throw InvalidInput("LEAP input sequences must have length " + std::to_string(k_));
  }
  if (in.statics.cols() != n_static_ || in.statics.rows() != B) {
    throw InvalidInput("LEAP static input must have width " + std::to_string(n_static_));
  }
  const CMapM W(theta_.data() + L.W, 4 * L.H, 2);
  const CMapM U(theta_.data() + L.U, 4 * L.H, L.H);
  const Eigen::Map<const Eigen::VectorXd> b(theta_.data() + L.b, 4 * L.H);
  const CMapM Ws(theta_.data() + L.Ws, L.D, L.S);
  const Eigen::Map<const Eigen::VectorXd> bs(theta_.data() + L.bs, L.D);
  const CMapM Wp(theta_.data() + L.Wp, L.P, L.H + L.D);
  const Eigen::Map<const Eigen::VectorXd> bp(theta_.data() + L.bp, L.P);
  const CMapM Wo(theta_.data() + L.Wo, L.O, L.P);
  const Eigen::Map<const Eigen::VectorXd> bo(theta_.data() + L.bo, L.O);

  Tape local;
  Tape& tp = tape ? *tape : local;
  tp = Tape{};
  tp.B = static_cast<int>(B);
  Mat h = Mat::Zero(L.H, B);
  Mat c = Mat::Zero(L.H, B);
  tp.h.push_back(h);
  for (int t = 0; t < k_; ++t) {
    Mat x(2, B);
    x.row(0) = in.calls.col(t).transpose();
    x.row(1) = in.cum.col(t).transpose();
    Mat a = W * x + U * h;
    a.colwise() += b;
    Mat gi = sigmoid(a.topRows(L.H));
    Mat gf = sigmoid(a.middleRows(L.H, L.H));
    Mat gg = a.middleRows(2 * L.H, L.H).array().tanh().matrix();
    Mat go = sigmoid(a.bottomRows(L.H));
    c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
    Mat tc = c.array().tanh().matrix();
    h = go.cwiseProduct(tc);
    if (tape) {
      tp.x.push_back(std::move(x));
      tp.i.push_back(std::move(gi));
      tp.f.push_back(std::move(gf));
      tp.g.push_back(std::move(gg));
      tp.o.push_back(std::move(go));
      tp.c.push_back(c);
      tp.tanh_c.push_back(std::move(tc));
      tp.h.push_back(h);
    }
  }
  tp.statics = in.statics.transpose();
  tp.s_pre = Ws * tp.statics;
  tp.s_pre.colwise() += bs;
  tp.s_act = tp.s_pre.cwiseMax(0.0);
  tp.z.resize(L.H + L.D, B);
  tp.z << h, tp.s_act;
  tp.p_pre = Wp * tp.z;
  tp.p_pre.colwise() += bp;
  tp.p_act = tp.p_pre.cwiseMax(0.0);
  Mat out = Wo * tp.p_act;
  out.colwise() += bo;
  return out.transpose();
}

Eigen::VectorXd LeapModel::backward(const Tape& tp, const Mat& dlogits) const {
  const Layout L = layout_of(config_, n_static_, outputs_);
  if (dlogits.rows() != tp.B || dlogits.cols() != outputs_) {
    throw InvalidInput("dlogits shape does not match the recorded batch");
  }
  if (static_cast<int>(tp.x.size()) != k_) throw InvalidInput("tape was recorded without activations");
  const CMapM U(theta_.data() + L.U, 4 * L.H, L.H);
  const CMapM Ws(theta_.data() + L.Ws, L.D, L.S);
  const CMapM Wp(theta_.data() + L.Wp, L.P, L.H + L.D);
  const CMapM Wo(theta_.data() + L.Wo, L.O, L.P);
  (void)Ws;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  MapM gW(grad.data() + L.W, 4 * L.H, 2);
  MapM gU(grad.data() + L.U, 4 * L.H, L.H);
  Eigen::Map<Eigen::VectorXd> gb(grad.data() + L.b, 4 * L.H);
  MapM gWs(grad.data() + L.Ws, L.D, L.S);
  Eigen::Map<Eigen::VectorXd> gbs(grad.data() + L.bs, L.D);
  MapM gWp(grad.data() + L.Wp, L.P, L.H + L.D);
  Eigen::Map<Eigen::VectorXd> gbp(grad.data() + L.bp, L.P);
  MapM gWo(grad.data() + L.Wo, L.O, L.P);
  Eigen::Map<Eigen::VectorXd> gbo(grad.data() + L.bo, L.O);

  const Mat dout = dlogits.transpose();  // O x B
  gWo = dout * tp.p_act.transpose();
  gbo = dout.rowwise().sum();
  Mat dp = (Wo.transpose() * dout).cwiseProduct((tp.p_pre.array() > 0.0).cast<double>().matrix());
  gWp = dp * tp.z.transpose();
  gbp = dp.rowwise().sum();
  const Mat dz = Wp.transpose() * dp;
  const Mat ds = dz.bottomRows(L.D).cwiseProduct((tp.s_pre.array() > 0.0).cast<double>().matrix());
  gWs = ds * tp.statics.transpose();
  gbs = ds.rowwise().sum();

  Mat dh = dz.topRows(L.H);
  Mat dc = Mat::Zero(L.H, tp.B);
  Mat da(4 * L.H, tp.B);
  for (int t = k_ - 1; t >= 0; --t) {
    const Mat& gi = tp.i[t];
    const Mat& gf = tp.f[t];
    const Mat& gg = tp.g[t];
    const Mat& go = tp.o[t];
    const Mat& tc = tp.tanh_c[t];
    const Mat c_prev = t > 0 ? tp.c[t - 1] : Mat::Zero(L.H, tp.B);
    const Mat d_o = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(go).cwiseProduct((1.0 - tc.array().square()).matrix());
    const Mat d_i = dc.cwiseProduct(gg);
    const Mat d_g = dc.cwiseProduct(gi);
    const Mat d_f = dc.cwiseProduct(c_prev);
    da.topRows(L.H) = d_i.cwiseProduct((gi.array() * (1.0 - gi.array())).matrix());
    da.middleRows(L.H, L.H) = d_f.cwiseProduct((gf.array() * (1.0 - gf.array())).matrix());
    da.middleRows(2 * L.H, L.H) = d_g.cwiseProduct((1.0 - gg.array().square()).matrix());
    da.bottomRows(L.H) = d_o.cwiseProduct((go.array() * (1.0 - go.array())).matrix());
    gW += da * tp.x[t].transpose();
    gU += da * tp.h[t].transpose();
    gb += da.rowwise().sum();
    dh = U.transpose() * da;
    dc = dc.cwiseProduct(gf);
  }
  return grad;
}

Mat LeapModel::forward(const LeapInputs& in) const { return sigmoid(logits(in)); }

double LeapModel::bce(const LeapInputs& in, const Mat& targets, Eigen::VectorXd* grad) const {
  Tape tape;
  const Mat z = logits(in, grad ? &tape : nullptr);
  if (targets.rows() != z.rows() || targets.cols() != z.cols()) {
    throw InvalidInput("targets shape does not match model outputs");
  }
  const double n = static_cast<double>(z.size());
  // softplus(z) - y z, evaluated stably.
  const Eigen::ArrayXXd za = z.array();
  const Eigen::ArrayXXd softplus = za.max(0.0) + (-za.abs()).exp().log1p();
  const double loss = (softplus - targets.array() * za).sum() / n;
  if (grad) *grad = backward(tape, (sigmoid(z) - targets) / n);
  return loss;
}

std::vector<double> LeapModel::predict(const Dataset& data) const {
  const Mat p = forward(all_inputs(data));
  return std::vector<double>(p.col(0).data(), p.col(0).data() + p.rows());
}

Mat LeapModel::predict_all(const Dataset& data) const { return forward(all_inputs(data)); }

double LeapModel::predict_one(const std::vector<int>& call_seq, const std::vector<double>& cum_scaled,
                              const std::vector<double>& statics_scaled) const {
  if (static_cast<int>(call_seq.size()) != k_ || static_cast<int>(cum_scaled.size()) != k_) {
    throw InvalidInput("LEAP input sequences must have length " + std::to_string(k_));
  }
  if (static_cast<int>(statics_scaled.size()) != n_static_) {
    throw InvalidInput("LEAP static input must have width " + std::to_string(n_static_));
  }
  LeapInputs in;
  in.calls.resize(1, k_);
  in.cum.resize(1, k_);
  in.statics.resize(1, n_static_);
  for (int t = 0; t < k_; ++t) {
    in.calls(0, t) = call_seq[t];
    in.cum(0, t) = cum_scaled[t];
  }
  for (int f = 0; f < n_static_; ++f) in.statics(0, f) = statics_scaled[f];
  return forward(in)(0, 0);
}

nlohmann::json LeapModel::to_json() const {
  const Layout L = layout_of(config_, n_static_, outputs_);
  const auto m = [&](Eigen::Index off, Eigen::Index r, Eigen::Index c) {
    return matrix_json(CMapM(theta_.data() + off, r, c));
  };
  nlohmann::json j;
  j["kind"] = "leap";
  j["config"] = {{"lstm_hidden", config_.lstm_hidden}, {"dense_in_units", config_.dense_in_units},
                 {"penult_units", config_.penult_units}, {"batch", config_.batch},
                 {"epochs", config_.epochs},           {"optimizer", config_.optimizer},
                 {"learning_rate", config_.learning_rate}, {"seed", config_.seed}};
  j["k"] = k_;
  j["n_static"] = n_static_;
  j["outputs"] = outputs_;
  j["lstm"] = {{"gate_order", "i,f,g,o"},
               {"W", m(L.W, 4 * L.H, 2)},
               {"U", m(L.U, 4 * L.H, L.H)},
               {"b", m(L.b, 4 * L.H, 1)}};
  j["static_dense"] = {{"W", m(L.Ws, L.D, L.S)}, {"b", m(L.bs, L.D, 1)}};
  j["penult"] = {{"W", m(L.Wp, L.P, L.H + L.D)}, {"b", m(L.bp, L.P, 1)}};
  j["head"] = {{"W", m(L.Wo, L.O, L.P)}, {"b", m(L.bo, L.O, 1)}};
  return j;
}

LeapModel LeapModel::from_json(const nlohmann::json& j) {
  if (j.at("kind") != "leap") throw InvalidInput("artifact is not a LEAP model");
  const auto& c = j.at("config");
  LeapConfig cfg;
  cfg.lstm_hidden = c.at("lstm_hidden").get<int>();
  cfg.dense_in_units = c.at("dense_in_units").get<int>();
  cfg.penult_units = c.at("penult_units").get<int>();
  cfg.batch = c.at("batch").get<int>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.optimizer = c.at("optimizer").get<std::string>();
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  LeapModel model(cfg, j.at("k").get<int>(), j.at("n_static").get<int>(), j.at("outputs").get<int>());
  const Layout L = layout_of(cfg, model.n_static_, model.outputs_);
  double* p = model.theta_.data();
  matrix_from_json(j.at("lstm").at("W"), MapM(p + L.W, 4 * L.H, 2), "lstm.W");
  matrix_from_json(j.at("lstm").at("U"), MapM(p + L.U, 4 * L.H, L.H), "lstm.U");
  matrix_from_json(j.at("lstm").at("b"), MapM(p + L.b, 4 * L.H, 1), "lstm.b");
  matrix_from_json(j.at("static_dense").at("W"), MapM(p + L.Ws, L.D, L.S), "static_dense.W");
  matrix_from_json(j.at("static_dense").at("b"), MapM(p + L.bs, L.D, 1), "static_dense.b");
  matrix_from_json(j.at("penult").at("W"), MapM(p + L.Wp, L.P, L.H + L.D), "penult.W");
  matrix_from_json(j.at("penult").at("b"), MapM(p + L.bp, L.P, 1), "penult.b");
  matrix_from_json(j.at("head").at("W"), MapM(p + L.Wo, L.O, L.P), "head.W");
  matrix_from_json(j.at("head").at("b"), MapM(p + L.bo, L.O, 1), "head.b");
  if (!model.theta_.allFinite()) throw InvalidInput("LEAP artifact has non-finite weights");
  return model;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (m_.size() != params.size()) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

TrainResult leap_train(const LeapConfig& config, const Dataset& train, const LeapModel* warm_start) {
  config.validate();
  if (train.size() == 0) throw InvalidInput("LEAP training set is empty");
  TrainResult out;
  if (warm_start) {
    out.model = *warm_start;
    if (out.model.k() != train.k || out.model.outputs() != train.outputs()) {
      throw InvalidInput("warm-start model does not match the training data");
    }
  } else {
    out.model = LeapModel(config, train.k, static_cast<int>(train.statics.cols()), train.outputs());
    out.model.init(config.seed);
  }
  const LeapInputs everything = all_inputs(train);
  const auto full_loss = [&](int epoch) {
    const double loss = out.model.bce(everything, train.targets);
    if (!std::isfinite(loss)) {
      throw Error("LEAP training produced a non-finite loss after epoch " + std::to_string(epoch));
    }
    out.loss_trace.push_back(loss);
  };
  full_loss(0);

  std::mt19937_64 rng(config.seed ^ 0xA5A5A5A5ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Adam adam(config.learning_rate);
  Eigen::VectorXd grad;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      const std::vector<std::size_t> rows(order.begin() + start, order.begin() + end);
      const LeapInputs in = gather(train, rows);
      Mat targets(static_cast<Eigen::Index>(rows.size()), train.outputs());
      for (std::size_t r = 0; r < rows.size(); ++r) targets.row(r) = train.targets.row(rows[r]);
      const double loss = out.model.bce(in, targets, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw Error("LEAP training diverged in epoch " + std::to_string(epoch) + " at batch start " +
                    std::to_string(start));
      }
      if (config.optimizer == "adam") {
        adam.step(out.model.params(), grad);
      } else {
        out.model.params() -= config.learning_rate * grad;
      }
    }
    full_loss(epoch);
  }
  return out;
}

GradientCheck gradient_check(const LeapModel& model, const LeapInputs& in, const Mat& targets,
                             double eps) {
  GradientCheck out;
  Eigen::VectorXd analytic;
  model.bce(in, targets, &analytic);
  LeapModel probe = model;
  for (Eigen::Index p = 0; p < model.n_params(); ++p) {
    const double saved = probe.params()(p);
    probe.params()(p) = saved + eps;
    const double up = probe.bce(in, targets);
    probe.params()(p) = saved - eps;
    const double down = probe.bce(in, targets);
    probe.params()(p) = saved;
    const double numeric = (up - down) / (2.0 * eps);
    if (!std::isfinite(numeric) || !std::isfinite(analytic(p))) {
      out.all_finite = false;
      continue;
    }
    const double denom = std::max({std::abs(analytic(p)), std::abs(numeric), 1e-6});
    const double rel = std::abs(analytic(p) - numeric) / denom;
    if (rel > out.max_relative_error) {
      out.max_relative_error = rel;
      out.worst_param = p;
    }
  }
  return out;
}

}  // namespace adherence::learn
