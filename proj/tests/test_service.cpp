#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "adherence/learn/dataset.hpp"
#include "adherence/plan.hpp"
#include "adherence/service.hpp"
#include "adherence/simkit.hpp"
#include "adherence/tasklab.hpp"

// After Eigen: the resolver headers pulled in here define _res.
#include <httplib.h>

using namespace adherence;
using namespace adherence::service;
using nlohmann::json;

namespace {

Cohort small_cohort() {
  sim::SimConfig c;
  c.n_patients = 150;
  c.seed = 31;
  return sim::to_cohort(sim::simulate_cohort(c));
}

RiskArtifact untrained_risk(const Cohort& cohort) {
  const auto samples = tasks::gen_risk_samples(cohort);
  RiskArtifact a;
  a.scaler = learn::fit_scaler(samples);
  a.reference = eval::OcclusionReference::from(learn::make_dataset(samples, a.scaler));
  learn::LeapConfig c;
  c.lstm_hidden = 4;
  c.dense_in_units = 4;
  c.penult_units = 2;
  a.model = learn::LeapModel(c, 7);
  a.model.init(2);
  return a;
}

}  // namespace

TEST(Service, CohortAndPatientViews) {
  ServiceState s(small_cohort(), std::nullopt, std::nullopt, std::nullopt);
  const Response c = s.handle("GET", "/api/cohort", "");
  ASSERT_EQ(c.status, 200);
  EXPECT_EQ(c.body["today"], s.today().iso());
  ASSERT_FALSE(c.body["patients"].empty());
  const std::string id = c.body["patients"][0]["patient_id"];
  const Response p = s.handle("GET", "/api/patients/" + id, "");
  ASSERT_EQ(p.status, 200);
  EXPECT_EQ(p.body["days"].size(), c.body["patients"][0]["days"].get<std::size_t>());
  EXPECT_EQ(p.body["features"].size(), 29u);

  EXPECT_EQ(s.handle("GET", "/api/patients/NOPE", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/api/unknown", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/other", "").status, 404);
  EXPECT_EQ(s.handle("DELETE", "/api/cohort", "").status, 405);
  const Response r = s.handle("GET", "/api/patients/" + id + "/risk", "");
  EXPECT_EQ(r.status, 503);
  EXPECT_TRUE(r.body.contains("code"));
}

TEST(Service, RiskScoresWithAttribution) {
  const Cohort cohort = small_cohort();
  ServiceState s(cohort, untrained_risk(cohort), std::nullopt, std::nullopt);
  const Response c = s.handle("GET", "/api/cohort", "");
  int scored = 0;
  for (const auto& p : c.body["patients"]) {
    const Response r = s.handle("GET", "/api/patients/" + p["patient_id"].get<std::string>() + "/risk", "");
    if (p["days"].get<int>() < 7) {
      EXPECT_EQ(r.status, 422);
      continue;
    }
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const double score = r.body["score"];
    EXPECT_GT(score, 0.0);
    EXPECT_LT(score, 1.0);
    EXPECT_EQ(r.body["attribution"]["days"].size(), 7u);
    const auto& f = r.body["attribution"]["features"];
    ASSERT_EQ(f.size(), 29u);
    for (std::size_t i = 1; i < f.size(); ++i) {
      EXPECT_GE(std::abs(f[i - 1]["delta"].get<double>()), std::abs(f[i]["delta"].get<double>()));
    }
    ++scored;
  }
  EXPECT_GT(scored, 0);
}

TEST(Service, PlanSessionFlow) {
  ServiceState s(small_cohort(), std::nullopt, std::nullopt, std::nullopt, 60);
  const Response inst = s.handle("GET", "/api/plan/instance", "");
  ASSERT_EQ(inst.status, 200) << inst.body.dump();
  EXPECT_EQ(inst.body["predictor"], "lw_misses");
  const auto& rows = inst.body["reward"];
  Eigen::MatrixXd reward(rows.size(), 7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int t = 0; t < 7; ++t) reward(i, t) = rows[i][t].get<double>();
  }
  const plan::VisitPlan best = plan::solve_plan(reward);
  const Response opt = s.handle("GET", "/api/plan/optimal", "");
  ASSERT_EQ(opt.status, 200);
  EXPECT_DOUBLE_EQ(opt.body["objective"].get<double>(), best.objective);

  for (int t = 0; t < 7; ++t) {
    if (best.day_location[t] < 0) continue;
    const json req{{"day", t + 1}, {"location", inst.body["locations"][best.day_location[t]]}};
    ASSERT_EQ(s.handle("POST", "/api/plan/choose", req.dump()).status, 200);
  }
  const Response st = s.handle("GET", "/api/plan/state", "");
  EXPECT_DOUBLE_EQ(st.body["objective"].get<double>(), best.objective);
  EXPECT_EQ(st.body["days_elapsed"], 0);

  // A second session is independent.
  EXPECT_EQ(s.handle("GET", "/api/plan/state", "", "other").body["objective"], 0.0);

  int used_day = -1;
  for (int t = 0; t < 7; ++t) if (best.day_location[t] >= 0) { used_day = t; break; }
  ASSERT_GE(used_day, 0);
  const std::string loc = inst.body["locations"][best.day_location[used_day]];
  EXPECT_EQ(s.handle("POST", "/api/plan/choose", json{{"day", used_day + 1}, {"location", loc}}.dump()).status, 409);
  EXPECT_EQ(s.handle("POST", "/api/plan/choose", json{{"day", 9}, {"location", loc}}.dump()).status, 400);
  EXPECT_EQ(s.handle("POST", "/api/plan/choose", json{{"day", 1}, {"location", "nowhere"}}.dump()).status, 400);
  EXPECT_EQ(s.handle("POST", "/api/plan/choose", "{not json").status, 400);

  const Response reset = s.handle("POST", "/api/plan/reset", "");
  ASSERT_EQ(reset.status, 200);
  EXPECT_EQ(reset.body["objective"], 0.0);
  EXPECT_EQ(s.handle("POST", "/api/plan/choose", json{{"day", used_day + 1}, {"location", loc}}.dump()).status, 200);

  const Date before = s.today();
  const Response step = s.handle("POST", "/api/sim/step", json{{"days", 3}}.dump());
  ASSERT_EQ(step.status, 200);
  EXPECT_EQ(s.today(), before + 3);
  EXPECT_EQ(step.body["plan_days_elapsed"], 3);
  EXPECT_EQ(s.handle("GET", "/api/plan/state", "").body["days_elapsed"], 3);
  EXPECT_EQ(s.handle("POST", "/api/sim/step", json{{"days", 0}}.dump()).status, 400);
  EXPECT_EQ(s.handle("POST", "/api/sim/step", json{{"days", 100000}}.dump()).status, 200);
  EXPECT_EQ(s.handle("POST", "/api/sim/step", "").status, 409);
}

TEST(Service, ServesOverHttp) {
  const Cohort cohort = small_cohort();
  static ServiceState live(cohort, std::nullopt, std::nullopt, std::nullopt);
  const int port = 18000 + static_cast<int>(::getpid() % 1000);
  std::thread([port] { serve(live, "127.0.0.1", port); }).detach();

  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int attempt = 0; attempt < 50 && !res; ++attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = client.Get("/api/cohort");
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_FALSE(json::parse(res->body)["patients"].empty());
  const auto missing = client.Get("/api/patients/NOPE");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  const auto post = client.Post("/api/sim/step", R"({"days": 1})", "application/json");
  ASSERT_TRUE(post);
  EXPECT_EQ(post->status, 200);

}

TEST(Service, BusyPortThrows) {
  // A plain listener without SO_REUSEPORT keeps the port exclusive.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(fd, 1), 0);
  socklen_t len = sizeof addr;
  ASSERT_EQ(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len), 0);
  ServiceState other(small_cohort(), std::nullopt, std::nullopt, std::nullopt);
  EXPECT_THROW(serve(other, "127.0.0.1", ntohs(addr.sin_port)), Error);
  ::close(fd);
}
