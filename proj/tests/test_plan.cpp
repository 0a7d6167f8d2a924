#include <gtest/gtest.h>

#include <random>

#include "adherence/dfl.hpp"
#include "adherence/plan.hpp"
#include "adherence/simkit.hpp"
#include "adherence/soft_plan.hpp"
#include "adherence/tasklab.hpp"
#include "fixtures.hpp"

using namespace adherence;
using namespace adherence::plan;
using fixtures::history_from;

namespace {

Eigen::MatrixXd random_reward(int L, std::mt19937_64& rng, bool integer = false) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_int_distribution<int> k(0, 3);
  Eigen::MatrixXd r(L, kDays);
  for (int i = 0; i < L; ++i) {
    for (int t = 0; t < kDays; ++t) r(i, t) = integer ? k(rng) : u(rng);
  }
  return r;
}

CoefRow row(const std::string& bits) {
  CoefRow r{};
  for (int t = 0; t < kDays; ++t) r[t] = bits[t] == '1' ? 1.0 : 0.0;
  return r;
}

}  // namespace

TEST(TrueCoefficients, Examples) {
  const auto h = history_from("11111111" "1101111");
  EXPECT_EQ(true_coefficient_row(h, 7), row("1110000"));
  EXPECT_EQ(true_coefficient_row(history_from(std::string(15, '1')), 7), row("0000000"));
  EXPECT_EQ(true_coefficient_row(history_from("11111111" "1111110"), 7), row("1111111"));
  // HIGH on t0 means the patient is already flagged.
  EXPECT_EQ(true_coefficient_row(history_from("11100001" "0111111"), 7), row("0000000"));
}

TEST(Solve, HandFixture) {
  CoefMatrix c;
  c.rows = {row("1111111"), row("1100000"), row("1000000"), row("1000000"), row("1110000"), row("0000000")};
  const std::vector<std::string> locs{"A", "A", "B", "B", "C", "C"};
  const PlanInstance inst = build_instance(locs, c);
  ASSERT_EQ(inst.n_locations(), 3);
  EXPECT_EQ(inst.reward.row(0), (Eigen::RowVectorXd(7) << 2, 2, 1, 1, 1, 1, 1).finished());
  EXPECT_EQ(inst.reward.row(1), (Eigen::RowVectorXd(7) << 2, 0, 0, 0, 0, 0, 0).finished());
  const VisitPlan p = solve_plan(inst);
  EXPECT_DOUBLE_EQ(p.objective, 5.0);
  EXPECT_EQ(p.day_location, (std::array<int, 7>{1, 0, 2, -1, -1, -1, -1}));
  EXPECT_TRUE(feasible(p, 3));
  EXPECT_EQ(evaluate_plan(p, c, inst.patient_location), 5);
  EXPECT_EQ(brute_force_plan(inst).objective, 5.0);
  EXPECT_EQ(aggregate(inst, c), inst.reward);
}

TEST(Solve, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    const int L = 1 + trial % 6;
    const Eigen::MatrixXd r = random_reward(L, rng, trial % 2 == 0);
    const VisitPlan a = solve_plan(r), b = brute_force_plan(r);
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
    EXPECT_NEAR(plan_value(a, r), a.objective, 1e-9);
    EXPECT_TRUE(feasible(a, L));
  }
}

TEST(Solve, EdgeCases) {
  EXPECT_EQ(count_feasible_plans(2, 2), 7u);
  EXPECT_EQ(count_feasible_plans(1, 7), 8u);
  const VisitPlan zero = solve_plan(Eigen::MatrixXd::Zero(3, 7));
  EXPECT_EQ(zero.objective, 0.0);
  for (int d : zero.day_location) EXPECT_EQ(d, -1);
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Ones(2, 7);
  EXPECT_EQ(solve_plan(neg).objective, 0.0);
  EXPECT_THROW(brute_force_plan(Eigen::MatrixXd::Ones(9, 7)), InvalidInput);
  VisitPlan twice;
  twice.day_location = {0, 0, -1, -1, -1, -1, -1};
  EXPECT_FALSE(feasible(twice, 2));
}

TEST(Soft, WithinBoundOfExact) {
  std::mt19937_64 rng(2);
  for (double gamma : {0.1, 0.5}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd r = random_reward(2 + trial % 7, rng);
      const SoftSolution s = soft_solve(r, gamma);
      const double exact = solve_plan(r).objective;
      const double soft = (r.array() * s.x.array()).sum();
      EXPECT_LE(soft, exact + 1e-7);
      EXPECT_GE(soft, exact - 3.5 * gamma - 1e-7);
      EXPECT_LT(s.residual, 1e-6);
      EXPECT_GE(s.x.minCoeff(), -1e-9);
    }
  }
  EXPECT_EQ(soft_solve(Eigen::MatrixXd::Zero(3, 7), 0.1).x, Eigen::MatrixXd::Zero(3, 7));
  EXPECT_THROW(soft_solve(Eigen::MatrixXd::Ones(2, 7), 0.0), InvalidInput);
}

TEST(Soft, SmallGammaRoundsToExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd r = random_reward(3 + trial % 4, rng);
    const SoftSolution s = soft_solve(r, 1e-4);
    const Eigen::MatrixXd rounded = (s.x.array() > 0.5).cast<double>();
    EXPECT_NEAR((r.array() * rounded.array()).sum(), solve_plan(r).objective, 1e-9);
  }
}

TEST(Soft, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::MatrixXd r = random_reward(2 + trial % 4, rng);
    const SoftJacobian j = soft_grad(r, 0.5);
    const Eigen::MatrixXd fd = soft_grad_fd(r, 0.5);
    ASSERT_EQ(j.J.rows(), fd.rows());
    EXPECT_LT((j.J - fd).cwiseAbs().maxCoeff(), 1e-4);
    Eigen::MatrixXd u = Eigen::MatrixXd::Random(r.rows(), kDays);
    const Eigen::MatrixXd v = soft_vjp(r, 0.5, u);
    const Eigen::VectorXd expect = j.J.transpose() * Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
    EXPECT_LT((Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()) - expect).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(Dfl, GroupsAndBaselines) {
  sim::SimConfig c;
  c.n_patients = 120;
  c.seed = 6;
  const Cohort cohort = sim::to_cohort(sim::simulate_cohort(c));
  const auto samples = tasks::gen_plan_samples(cohort);
  const auto groups = make_groups(samples, 50, 1);
  ASSERT_EQ(groups.size(), samples.size() / 50);
  for (const auto& g : groups) {
    ASSERT_EQ(g.rows.size(), 50u);
    ASSERT_EQ(g.truth.size(), 50u);
    EXPECT_LE(g.instance.n_locations(), 8);
    const CoefMatrix lw = lw_misses_coefficients(samples, g, 1);
    EXPECT_LE(realized_value(lw, g), realized_value(g.truth, g));
    EXPECT_EQ(realized_value(g.truth, g), static_cast<int>(std::lround(solve_plan(g.instance).objective)));
  }
  EXPECT_THROW(make_groups(samples, 0, 1), InvalidInput);
}

TEST(Dfl, OneEpochImprovesSoftObjective) {
  sim::SimConfig c;
  c.n_patients = 150;
  c.seed = 7;
  const Cohort cohort = sim::to_cohort(sim::simulate_cohort(c));
  const auto samples = tasks::gen_plan_samples(cohort);
  const auto scaler = learn::fit_scaler(samples);
  const learn::Dataset data = learn::make_dataset(samples, scaler, 7);
  const auto groups = make_groups(samples, 40, 2);
  learn::LeapConfig lc;
  lc.lstm_hidden = 8;
  lc.dense_in_units = 8;
  lc.penult_units = 4;
  learn::LeapModel warm(lc, 7, 29, 7);
  warm.init(3);

  Eigen::VectorXd g;
  const double v0 = decision_value(warm, data, groups[0], 0.5, &g);
  ASSERT_EQ(g.size(), warm.n_params());
  // Directional check of the decision gradient.
  const double h = 1e-5;
  const Eigen::VectorXd dir = g.normalized();
  learn::LeapModel plus = warm, minus = warm;
  plus.params() -= h * dir;
  minus.params() += h * dir;
  const double fd = (decision_value(plus, data, groups[0], 0.5) - decision_value(minus, data, groups[0], 0.5)) / (2 * h);
  EXPECT_NEAR(fd, g.norm(), 1e-3 * std::max(1.0, g.norm()));
  EXPECT_GT(v0, 0.0);

  DflConfig cfg;
  cfg.gamma = 0.5;
  cfg.epochs = 1;
  cfg.learning_rate = 1e-3;
  const DflResult r = dfl_train(cfg, warm, data, groups);
  ASSERT_EQ(r.soft_objective.size(), 2u);
  ASSERT_EQ(r.hard_objective.size(), 2u);
  EXPECT_GE(r.soft_objective[1], r.soft_objective[0]);
}
