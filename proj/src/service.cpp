#include "adherence/service.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include <httplib.h>

#include "adherence/dfl.hpp"
#include "adherence/ingest.hpp"
#include "adherence/learn/dataset.hpp"
#include "adherence/learn/heuristics.hpp"
#include "adherence/tasklab.hpp"

namespace adherence::service {

using nlohmann::json;

namespace {

Response error(int status, const std::string& code, const std::string& message) {
  return {status, json{{"code", code}, {"message", message}}};
}

std::optional<RiskArtifact> load_artifact(const std::filesystem::path& file, std::string* missing) {
  if (!std::filesystem::exists(file)) {
    *missing = file.filename().string() + " not found in state directory";
    return std::nullopt;
  }
  std::ifstream in(file);
  try {
    return RiskArtifact::from_json(json::parse(in));
  } catch (const std::exception& e) {
    *missing = file.filename().string() + " unreadable: " + e.what();
    return std::nullopt;
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

json RiskArtifact::to_json() const {
  return json{{"model", model.to_json()},
              {"scaler", scaler.to_json()},
              {"occlusion", {{"call_mean", reference.call_mean}, {"static_median", reference.static_median}}}};
}

RiskArtifact RiskArtifact::from_json(const json& j) {
  RiskArtifact a;
  a.model = learn::LeapModel::from_json(j.at("model"));
  a.scaler = features::PercentileScaler::from_json(j.at("scaler"));
  a.reference.call_mean = j.at("occlusion").at("call_mean").get<double>();
  a.reference.static_median = j.at("occlusion").at("static_median").get<std::vector<double>>();
  return a;
}

ServiceState::ServiceState(const ServiceOptions& options) : group_size_(options.group_size) {
  const auto& dir = options.state_dir;
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidInput("state directory " + dir.string() + " does not exist");
  }
  cohort_ = ingest::ingest_directory(dir).cohort;
  risk_ = load_artifact(dir / "model_risk_leap.json", &risk_missing_);
  std::string ignored;
  plan_model_ = load_artifact(dir / "model_plan_dfl.json", &ignored);
  if (!plan_model_) plan_model_ = load_artifact(dir / "model_plan_leap.json", &ignored);
  init(options.today);
}

ServiceState::ServiceState(Cohort cohort, std::optional<RiskArtifact> risk,
                           std::optional<RiskArtifact> plan_model, std::optional<Date> today,
                           int group_size)
    : cohort_(std::move(cohort)), risk_(std::move(risk)), plan_model_(std::move(plan_model)),
      group_size_(group_size) {
  if (!risk_) risk_missing_ = "no risk model loaded";
  init(today);
}

void ServiceState::init(std::optional<Date> today) {
  if (cohort_.empty()) throw InvalidInput("cannot serve an empty cohort");
  if (group_size_ < 1) throw InvalidInput("group size must be positive");
  if (plan_model_ && plan_model_->model.outputs() != plan::kDays) {
    throw InvalidInput("plan model must have 7 outputs");
  }
  std::sort(cohort_.begin(), cohort_.end(), [](const PatientHistory& a, const PatientHistory& b) {
    return a.record.patient_id < b.record.patient_id;
  });
  Date first = cohort_.front().calendar.start_date();
  horizon_ = cohort_.front().calendar.end_date();
  for (const auto& h : cohort_) {
    first = std::min(first, h.calendar.start_date());
    horizon_ = std::max(horizon_, h.calendar.end_date());
  }
  today_ = today.value_or(first + 60);
  build_plan_week();
}

Date ServiceState::today() const {
  std::shared_lock lock(mutex_);
  return today_;
}

const PatientHistory* ServiceState::find(const std::string& id) const {
  const auto it = std::lower_bound(cohort_.begin(), cohort_.end(), id,
                                   [](const PatientHistory& h, const std::string& v) {
                                     return h.record.patient_id < v;
                                   });
  return it != cohort_.end() && it->record.patient_id == id ? &*it : nullptr;
}

int ServiceState::day_of(const PatientHistory& h) const {
  const int d = today_ - h.calendar.start_date();
  return std::min(d, h.calendar.size() - 1);
}

// Patients at a week start today: 7 observed days and a full week ahead.
void ServiceState::build_plan_week() {
  PlanWeek w;
  w.start = today_ + 1;
  std::vector<tasks::TaskSample> samples;
  std::vector<std::string> locations;
  for (std::size_t p = 0; p < cohort_.size() && static_cast<int>(w.patients.size()) < group_size_; ++p) {
    const PatientHistory& h = cohort_[p];
    const int t0 = today_ - h.calendar.start_date();
    if (t0 < 6 || t0 + plan::kDays > h.calendar.size() - 1) continue;
    tasks::TaskSample s = tasks::input_sample(h, tasks::Task::Plan, t0);
    const plan::CoefRow row = plan::true_coefficient_row(h, t0);
    for (double v : row) s.coef.push_back(static_cast<int>(v));
    w.truth.rows.push_back(row);
    w.patients.push_back(p);
    w.anchors.push_back(t0);
    locations.push_back(h.record.tb_unit_id);
    samples.push_back(std::move(s));
  }
  if (w.patients.empty()) {
    week_.reset();
    week_missing_ = "no patient has a full planning week starting " + w.start.iso();
    return;
  }
  const plan::PlanInstance layout = plan::build_instance(locations, w.truth);
  plan::CoefMatrix predicted;
  if (plan_model_) {
    const learn::Dataset data = learn::make_dataset(samples, plan_model_->scaler, plan::kDays);
    predicted = plan::to_coefficients(plan_model_->model.predict_all(data));
    w.predictor = "leap";
  } else {
    for (const auto& s : samples) {
      plan::CoefRow row{};
      row.fill(learn::heuristic_score(learn::Heuristic::LwMisses, s) >= 1 ? 1.0 : 0.0);
      predicted.rows.push_back(row);
    }
    w.predictor = "lw_misses";
  }
  w.predicted = layout;
  w.predicted.reward = plan::aggregate(layout, predicted);
  week_ = std::move(w);
  week_missing_.clear();
}

std::optional<int> ServiceState::realized_days() const {
  if (!week_) return std::nullopt;
  return std::clamp(today_ - week_->start + 1, 0, plan::kDays);
}

Response ServiceState::handle(const std::string& method, const std::string& path,
                              const std::string& body, const std::string& session) {
  const std::vector<std::string> parts = split_path(path);
  const std::string sid = session.empty() ? "default" : session;
  try {
    if (parts.size() < 2 || parts[0] != "api") return error(404, "not_found", "unknown route " + path);
    if (method == "GET") {
      std::shared_lock lock(mutex_);
      if (parts.size() == 2 && parts[1] == "cohort") return cohort_view();
      if (parts.size() == 3 && parts[1] == "patients") return patient_view(parts[2]);
      if (parts.size() == 4 && parts[1] == "patients" && parts[3] == "risk") return risk_view(parts[2]);
      if (parts.size() == 3 && parts[1] == "plan" && parts[2] == "instance") return plan_instance();
      if (parts.size() == 3 && parts[1] == "plan" && parts[2] == "optimal") return plan_optimal();
      if (parts.size() == 3 && parts[1] == "plan" && parts[2] == "state") {
        const auto it = sessions_.find(sid);
        if (!week_) return error(503, "plan_unavailable", week_missing_);
        return {200, session_json(it == sessions_.end() ? Session{} : it->second)};
      }
    } else if (method == "POST") {
      std::unique_lock lock(mutex_);
      if (parts.size() == 3 && parts[1] == "plan" && parts[2] == "choose") return plan_choose(body, sid);
      if (parts.size() == 3 && parts[1] == "plan" && parts[2] == "reset") return plan_reset(sid);
      if (parts.size() == 3 && parts[1] == "sim" && parts[2] == "step") return sim_step(body);
    } else {
      return error(405, "method_not_allowed", method + " is not supported");
    }
    return error(404, "not_found", "unknown route " + method + " " + path);
  } catch (const json::exception& e) {
    return error(400, "bad_request", e.what());
  } catch (const InvalidInput& e) {
    return error(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

Response ServiceState::cohort_view() const {
  json patients = json::array();
  for (const auto& h : cohort_) {
    const int d = day_of(h);
    if (d < 0) continue;
    json p{{"patient_id", h.record.patient_id},
           {"tb_unit_id", h.record.tb_unit_id},
           {"center_id", h.record.center_id},
           {"enrollment_date", h.record.enrollment_date.iso()},
           {"days", d + 1},
           {"attention", to_string(h.timeline.at(d))},
           {"misses_last_7", missed_in_window(h.calendar, d, 7, Padding::Allow)}};
    patients.push_back(std::move(p));
  }
  return {200, json{{"today", today_.iso()}, {"patients", std::move(patients)}}};
}

Response ServiceState::patient_view(const std::string& id) const {
  const PatientHistory* h = find(id);
  if (!h) return error(404, "unknown_patient", "no patient " + id);
  const int d = day_of(*h);
  if (d < 0) return error(404, "not_enrolled", id + " enrolls after " + today_.iso());
  json days = json::array();
  for (int i = 0; i <= d; ++i) {
    days.push_back(json{{"date", h->calendar.date_of(i).iso()},
                        {"status", std::string(1, status_char(h->calendar.status(i)))},
                        {"attention", to_string(h->timeline.at(i))}});
  }
  json feats = json::array();
  const auto raw = features::static_features(h->calendar, h->record, std::max(0, d - 6), d);
  const auto& schema = features::FeatureSchema::v1();
  for (std::size_t f = 0; f < raw.size(); ++f) {
    feats.push_back(json{{"name", schema.features[f].name}, {"value", raw[f]}});
  }
  const PatientRecord& r = h->record;
  return {200, json{{"patient_id", r.patient_id},
                    {"gender", to_string(r.gender)},
                    {"age_band", r.age_band},
                    {"weight_band", r.weight_band},
                    {"center_id", r.center_id},
                    {"tb_unit_id", r.tb_unit_id},
                    {"enrollment_date", r.enrollment_date.iso()},
                    {"today", today_.iso()},
                    {"days", std::move(days)},
                    {"features", std::move(feats)}}};
}

Response ServiceState::risk_view(const std::string& id) const {
  const PatientHistory* h = find(id);
  if (!h) return error(404, "unknown_patient", "no patient " + id);
  if (!risk_) return error(503, "model_unavailable", risk_missing_);
  const int d = day_of(*h);
  const int k = risk_->model.k();
  if (d - k + 1 < 0) {
    return error(422, "insufficient_history", id + " has fewer than " + std::to_string(k) + " days");
  }
  const tasks::TaskSample s = tasks::input_sample(*h, tasks::Task::Risk, d, k);
  const eval::Attribution a = eval::occlusion_attribution(risk_->model, s, risk_->scaler, risk_->reference);
  json days = json::array();
  for (int i = 0; i < k; ++i) {
    days.push_back(json{{"date", h->calendar.date_of(d - k + 1 + i).iso()},
                        {"call", s.call_seq[static_cast<std::size_t>(i)]},
                        {"delta", a.days[static_cast<std::size_t>(i)]}});
  }
  json feats = json::array();
  const auto& schema = features::FeatureSchema::v1();
  for (std::size_t f = 0; f < a.features.size(); ++f) {
    feats.push_back(json{{"name", schema.features[f].name}, {"delta", a.features[f]}});
  }
  std::stable_sort(feats.begin(), feats.end(), [](const json& x, const json& y) {
    return std::abs(x["delta"].get<double>()) > std::abs(y["delta"].get<double>());
  });
  return {200, json{{"patient_id", id},
                    {"anchor_date", h->calendar.date_of(d).iso()},
                    {"attention", to_string(h->timeline.at(d))},
                    {"score", a.prediction},
                    {"attribution", {{"days", std::move(days)}, {"features", std::move(feats)}}}}};
}

Response ServiceState::plan_instance() const {
  if (!week_) return error(503, "plan_unavailable", week_missing_);
  json patients = json::array();
  for (std::size_t j = 0; j < week_->patients.size(); ++j) {
    const PatientHistory& h = cohort_[week_->patients[j]];
    patients.push_back(json{{"patient_id", h.record.patient_id}, {"location", h.record.tb_unit_id}});
  }
  json out = plan::to_json(week_->predicted);
  out["start_date"] = week_->start.iso();
  out["predictor"] = week_->predictor;
  out["patients"] = std::move(patients);
  out["days"] = plan::kDays;
  return {200, std::move(out)};
}

Response ServiceState::plan_optimal() const {
  if (!week_) return error(503, "plan_unavailable", week_missing_);
  const plan::VisitPlan p = plan::solve_plan(week_->predicted);
  return {200, plan::to_json(p, week_->predicted)};
}

json ServiceState::session_json(const Session& s) const {
  json out = plan::to_json(s.plan, week_->predicted);
  out["objective"] = plan::plan_value(s.plan, week_->predicted.reward);
  const int elapsed = realized_days().value_or(0);
  plan::VisitPlan past;
  for (int t = 0; t < elapsed; ++t) past.day_location[t] = s.plan.day_location[t];
  out["days_elapsed"] = elapsed;
  out["realized"] = plan::evaluate_plan(past, week_->truth, week_->predicted.patient_location);
  out["start_date"] = week_->start.iso();
  return out;
}

Response ServiceState::plan_choose(const std::string& body, const std::string& session) {
  if (!week_) return error(503, "plan_unavailable", week_missing_);
  const json req = json::parse(body);
  const int day = req.at("day").get<int>();
  const std::string location = req.at("location").get<std::string>();
  if (day < 1 || day > plan::kDays) return error(400, "bad_day", "day must be in 1..7");
  const auto& locs = week_->predicted.locations;
  const auto it = std::find(locs.begin(), locs.end(), location);
  if (it == locs.end()) return error(400, "unknown_location", "no location " + location + " in the plan");
  const int loc = static_cast<int>(it - locs.begin());
  Session& s = sessions_[session];
  if (s.plan.day_location[day - 1] >= 0) {
    return error(409, "infeasible", "day " + std::to_string(day) + " already has a visit");
  }
  if (std::find(s.plan.day_location.begin(), s.plan.day_location.end(), loc) != s.plan.day_location.end()) {
    return error(409, "infeasible", "location " + location + " is already visited this week");
  }
  s.plan.day_location[day - 1] = loc;
  s.plan.objective = plan::plan_value(s.plan, week_->predicted.reward);
  return {200, session_json(s)};
}

Response ServiceState::plan_reset(const std::string& session) {
  if (!week_) return error(503, "plan_unavailable", week_missing_);
  sessions_[session] = Session{};
  return {200, session_json(sessions_[session])};
}

Response ServiceState::sim_step(const std::string& body) {
  const json req = body.empty() ? json::object() : json::parse(body);
  const int days = req.value("days", 1);
  if (days < 1) return error(400, "bad_days", "days must be positive");
  const int room = horizon_ - today_;
  if (room <= 0) return error(409, "end_of_data", "no simulated days after " + today_.iso());
  today_ = today_ + std::min(days, room);
  json out{{"today", today_.iso()}, {"stepped", std::min(days, room)}};
  if (const auto e = realized_days()) out["plan_days_elapsed"] = *e;
  return {200, std::move(out)};
}

void serve(ServiceState& state, const std::string& host, int port) {
  httplib::Server server;
  const auto route = [&state](const httplib::Request& req, httplib::Response& res) {
    const Response r = state.handle(req.method, req.path, req.body, req.get_header_value("X-Session"));
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/api/.*)", route);
  server.Post(R"(/api/.*)", route);
  if (!server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  }
  server.listen_after_bind();
}

}  // namespace adherence::service
