#include "adherence/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adherence/csv.hpp"
#include "adherence/dfl.hpp"
#include "adherence/evalkit.hpp"
#include "adherence/ingest.hpp"
#include "adherence/json_io.hpp"
#include "adherence/learn/dataset.hpp"
#include "adherence/learn/forest.hpp"
#include "adherence/learn/heuristics.hpp"
#include "adherence/learn/leap.hpp"
#include "adherence/learn/logistic.hpp"
#include "adherence/service.hpp"
#include "adherence/simkit.hpp"
#include "adherence/tasklab.hpp"

namespace adherence {
namespace learn {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LeapConfig, lstm_hidden, dense_in_units, penult_units,
                                                batch, epochs, optimizer, learning_rate, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ForestConfig, n_trees, max_depth, seed)
}  // namespace learn
namespace plan {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DflConfig, gamma, epochs, groups_per_step,
                                                learning_rate, seed)
}  // namespace plan
}  // namespace adherence

namespace adherence::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

namespace {

/// Everything a run may be configured with. Absent keys keep defaults; the
/// LEAP and forest blocks fall back to the task presets.
struct RunConfig {
  sim::SimConfig sim;
  std::optional<learn::LeapConfig> leap;
  std::optional<learn::ForestConfig> forest;
  plan::DflConfig dfl;
  double test_frac = 0.25;
  std::uint64_t split_seed = 11;
  int smote_k = 5;
  int group_size = 100;
  std::optional<std::uint64_t> seed;

  learn::LeapConfig leap_for(tasks::Task t) const {
    learn::LeapConfig c = leap.value_or(t == tasks::Task::Outcome ? learn::LeapConfig::outcome()
                                        : t == tasks::Task::Lcfo  ? learn::LeapConfig::lcfo()
                                                                  : learn::LeapConfig::risk());
    if (seed) c.seed = *seed;
    return c;
  }
  learn::ForestConfig forest_for(tasks::Task t) const {
    learn::ForestConfig c = forest.value_or(t == tasks::Task::Outcome ? learn::ForestConfig::outcome()
                                            : t == tasks::Task::Lcfo  ? learn::ForestConfig::lcfo()
                                                                      : learn::ForestConfig::risk());
    if (seed) c.seed = *seed;
    return c;
  }
  std::uint64_t effective_seed() const { return seed.value_or(sim.seed); }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, sim, leap, forest, dfl, test_frac, split_seed,
                                                smote_k, group_size, seed)

struct Common {
  std::string dir = ".";
  std::string config;
  std::optional<std::uint64_t> seed;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw InvalidInput("cannot open config " + c.config);
    cfg = json::parse(in).get<RunConfig>();
  }
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.sim.seed = *c.seed;
    cfg.dfl.seed = *c.seed;
  }
  return cfg;
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("missing artifact " + file.string());
  return json::parse(in);
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << j.dump(1) << '\n';
}

/// Latest run of each command, with hashes of what it wrote. No wall-clock
/// fields, so identical inputs give an identical manifest.
void record(const fs::path& dir, const std::string& command, const RunConfig& cfg,
            const std::vector<fs::path>& artifacts, json metrics) {
  const fs::path file = dir / "manifest.json";
  json manifest = fs::exists(file) ? read_json(file) : json::object();
  const json config = cfg;
  json entry{{"seed", cfg.effective_seed()},
             {"config_hash", fnv1a_hex(config.dump())},
             {"config", config},
             {"metrics", std::move(metrics)}};
  json hashes = json::object();
  for (const auto& a : artifacts) {
    const std::string name = fs::relative(a, dir).generic_string();
    hashes[name] = file_hash(a);
    manifest["artifacts"][name] = hashes[name];
  }
  entry["artifacts"] = std::move(hashes);
  manifest["runs"][command] = std::move(entry);
  write_json(file, manifest);
}

std::string task_name(tasks::Task t) { return std::string(tasks::to_string(t)); }

fs::path samples_file(const fs::path& dir, tasks::Task t) { return dir / ("samples_" + task_name(t) + ".csv"); }
fs::path split_file(const fs::path& dir, tasks::Task t) { return dir / ("split_" + task_name(t) + ".json"); }
fs::path scaler_file(const fs::path& dir, tasks::Task t) { return dir / ("scaler_" + task_name(t) + ".json"); }
fs::path model_file(const fs::path& dir, tasks::Task t, const std::string& kind) {
  return dir / ("model_" + task_name(t) + "_" + kind + ".json");
}

struct Prepared {
  std::vector<tasks::TaskSample> samples;
  tasks::Split split;
  features::PercentileScaler scaler;
};

Prepared prepare(const fs::path& dir, tasks::Task task) {
  Prepared p;
  if (!fs::exists(samples_file(dir, task))) {
    throw Error("no " + samples_file(dir, task).filename().string() + "; run `label --task " +
                task_name(task) + "` first");
  }
  if (!fs::exists(split_file(dir, task))) {
    throw Error("no " + split_file(dir, task).filename().string() + "; run `featurize --task " +
                task_name(task) + "` first");
  }
  p.samples = tasks::read_samples(samples_file(dir, task));
  const auto test_ids = read_json(split_file(dir, task)).at("test_patients").get<std::vector<std::string>>();
  p.split = tasks::split_by(p.samples, test_ids);
  p.scaler = features::PercentileScaler::from_json(read_json(scaler_file(dir, task)));
  return p;
}

void write_roc(const fs::path& dir, const eval::Roc& roc, std::vector<fs::path>& out) {
  {
    std::ofstream csv(dir / "roc.csv");
    csv << "threshold,fpr,tpr\n";
    for (const auto& p : roc.points) {
      csv << (std::isinf(p.threshold) ? std::string("inf") : std::to_string(p.threshold)) << ','
          << p.fpr << ',' << p.tpr << '\n';
    }
  }
  {
    std::ofstream svg(dir / "roc.svg");
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"420\" viewBox=\"0 0 420 420\">\n"
        << "<rect x=\"10\" y=\"10\" width=\"400\" height=\"400\" fill=\"white\" stroke=\"black\"/>\n"
        << "<line x1=\"10\" y1=\"410\" x2=\"410\" y2=\"10\" stroke=\"#bbb\" stroke-dasharray=\"4\"/>\n"
        << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (const auto& p : roc.points) svg << 10 + 400 * p.fpr << ',' << 410 - 400 * p.tpr << ' ';
    svg << "\"/>\n<text x=\"250\" y=\"395\" font-size=\"14\">AUC " << roc.auc << "</text>\n</svg>\n";
  }
  out.push_back(dir / "roc.csv");
  out.push_back(dir / "roc.svg");
}

std::vector<double> model_scores(const fs::path& dir, tasks::Task task, const std::string& kind,
                                 const std::vector<tasks::TaskSample>& test,
                                 const features::PercentileScaler& scaler) {
  if (kind == "lw_misses") return learn::heuristic_scores(learn::Heuristic::LwMisses, test);
  if (kind == "t_misses") return learn::heuristic_scores(learn::Heuristic::TMisses, test);
  if (kind == "lw_manual") return learn::heuristic_scores(learn::Heuristic::LwManual, test);
  const json j = read_json(model_file(dir, task, kind));
  const learn::Dataset data = learn::make_dataset(test, scaler, task == tasks::Task::Plan ? plan::kDays : 1);
  if (kind == "leap" || kind == "dfl") return service::RiskArtifact::from_json(j).model.predict(data);
  if (kind == "forest") return learn::Forest::from_json(j.at("forest")).predict(data.statics);
  if (kind == "logistic") return learn::LogisticModel::from_json(j.at("logistic")).predict(data);
  throw InvalidInput("unknown model kind " + kind);
}

int cmd_simulate(const Common& c, std::optional<int> patients, const std::string& mode) {
  RunConfig cfg = load_config(c);
  if (patients) cfg.sim.n_patients = *patients;
  if (!mode.empty()) cfg.sim.policy.mode = sim::parse_policy_mode(mode);
  const fs::path dir = c.dir;
  fs::create_directories(dir);
  const sim::SimulatedCohort cohort = sim::simulate_cohort(cfg.sim);
  const auto files = sim::export_dataset(cohort, dir);
  std::size_t visits = 0;
  for (const auto& e : cohort.ledger.events) visits += e.kind == sim::InterventionKind::HouseVisit ? 1 : 0;
  record(dir, "simulate", cfg, files,
         {{"patients", cohort.patients.size()}, {"dose_events", cohort.events.size()}, {"house_visits", visits}});
  std::cout << "simulated " << cohort.patients.size() << " patients into " << dir.string() << '\n';
  return 0;
}

int cmd_ingest(const Common& c, const std::string& as_of) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = c.dir;
  std::optional<Date> cut;
  if (!as_of.empty()) cut = Date::parse(as_of);
  const ingest::IngestResult r = ingest::ingest_directory(dir, cut, cfg.sim.rules);
  {
    std::ofstream out(dir / "calendars.csv");
    csv::write_row(out, {"patient_id", "start_date", "adherence", "attention"});
    for (const auto& h : r.cohort) {
      std::string att;
      for (auto l : h.timeline.levels) att.push_back(l == AttentionLevel::High ? 'H' : 'M');
      csv::write_row(out, {h.record.patient_id, h.calendar.start_date().iso(), h.calendar.adherence_string(), att});
    }
  }
  json rejects = json::array();
  for (const auto& rj : r.report.rejects) rejects.push_back({{"file", rj.file}, {"line", rj.line}, {"reason", rj.reason}});
  const json report{{"patients_in", r.report.patients_in},
                    {"patients_out", r.report.patients_out},
                    {"call_rows", r.report.call_rows},
                    {"dropped_unregistered", r.report.dropped_unregistered},
                    {"dropped_unknown_patient", r.report.dropped_unknown_patient},
                    {"removed_patients", r.report.removed_patients},
                    {"removed_phones", r.report.removed_phones},
                    {"removed_fraction", r.report.removed_fraction},
                    {"rejects", rejects}};
  write_json(dir / "ingest_report.json", report);
  record(dir, "ingest", cfg, {dir / "calendars.csv", dir / "ingest_report.json"},
         {{"patients_out", r.report.patients_out}, {"rejects", r.report.rejects.size()}});
  std::cout << "ingested " << r.report.patients_out << " of " << r.report.patients_in << " patients\n";
  return 0;
}

int cmd_label(const Common& c, tasks::Task task) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = c.dir;
  const Cohort cohort = ingest::ingest_directory(dir, std::nullopt, cfg.sim.rules).cohort;
  const auto samples = tasks::generate(task, cohort);
  tasks::write_samples(samples_file(dir, task), samples);
  int positives = 0;
  for (const auto& s : samples) positives += s.label;
  json metrics{{"samples", samples.size()}, {"positives", positives}};
  if (task == tasks::Task::Risk && fs::exists(dir / "ledger.csv")) {
    metrics["contamination_violations"] =
        tasks::contamination_violations(samples, cohort, sim::load_ledger(dir / "ledger.csv")).size();
  }
  record(dir, "label:" + task_name(task), cfg, {samples_file(dir, task)}, metrics);
  std::cout << "wrote " << samples.size() << " " << task_name(task) << " samples (" << positives << " positive)\n";
  return 0;
}

int cmd_featurize(const Common& c, tasks::Task task) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = c.dir;
  const auto samples = tasks::read_samples(samples_file(dir, task));
  const tasks::Split sp = tasks::split(samples, cfg.test_frac, cfg.split_seed);
  if (sp.train.empty()) throw Error("training split is empty");
  const features::PercentileScaler scaler = learn::fit_scaler(sp.train);
  write_json(split_file(dir, task), {{"test_frac", cfg.test_frac},
                                     {"seed", cfg.split_seed},
                                     {"test_patients", sp.test_patients},
                                     {"n_train", sp.train.size()},
                                     {"n_test", sp.test.size()}});
  write_json(scaler_file(dir, task), scaler.to_json());
  const fs::path feats = dir / ("features_" + task_name(task) + ".csv");
  {
    std::ofstream out(feats);
    csv::Row header{"patient_id", "anchor", "split"};
    for (const auto& f : features::FeatureSchema::v1().features) header.push_back(f.name);
    csv::write_row(out, header);
    const auto emit = [&](const std::vector<tasks::TaskSample>& rows, const char* name) {
      for (const auto& s : rows) {
        csv::Row r{s.patient_id, std::to_string(s.anchor), name};
        char buf[32];
        for (double v : scaler.transform(s.features)) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          r.push_back(buf);
        }
        csv::write_row(out, r);
      }
    };
    emit(sp.train, "train");
    emit(sp.test, "test");
  }
  record(dir, "featurize:" + task_name(task), cfg, {split_file(dir, task), scaler_file(dir, task), feats},
         {{"n_train", sp.train.size()}, {"n_test", sp.test.size()}});
  std::cout << "split " << sp.train.size() << " train / " << sp.test.size() << " test samples\n";
  return 0;
}

int cmd_train(const Common& c, tasks::Task task, const std::string& kind) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = c.dir;
  const Prepared p = prepare(dir, task);
  const int outputs = task == tasks::Task::Plan ? plan::kDays : 1;
  const learn::Dataset train = learn::make_dataset(p.split.train, p.scaler, outputs);
  std::vector<std::string> warnings;
  const learn::Dataset balanced = learn::oversample(train, cfg.smote_k, cfg.effective_seed(), &warnings);
  json artifact;
  json metrics{{"n_train", train.size()}, {"n_balanced", balanced.size()}};
  if (kind == "leap") {
    const learn::TrainResult r = learn::leap_train(cfg.leap_for(task), balanced);
    artifact = service::RiskArtifact{r.model, p.scaler, eval::OcclusionReference::from(train)}.to_json();
    artifact["loss_trace"] = r.loss_trace;
    metrics["final_loss"] = r.loss_trace.back();
  } else if (kind == "forest") {
    if (outputs != 1) throw InvalidInput("forest supports single-output tasks only");
    const learn::Forest f = learn::Forest::train(cfg.forest_for(task), balanced.statics, balanced.labels);
    warnings.insert(warnings.end(), f.warnings().begin(), f.warnings().end());
    artifact = {{"forest", f.to_json()}};
  } else if (kind == "logistic") {
    if (outputs != 1) throw InvalidInput("logistic supports single-output tasks only");
    artifact = {{"logistic", learn::LogisticModel::train(balanced).to_json()}};
  } else {
    throw InvalidInput("unknown model kind " + kind + " (leap, forest, logistic)");
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  const fs::path out = model_file(dir, task, kind);
  write_json(out, artifact);
  metrics["warnings"] = warnings;
  record(dir, "train:" + task_name(task) + ":" + kind, cfg, {out}, metrics);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_eval(const Common& c, tasks::Task task, const std::string& kind, const std::string& table) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = c.dir;
  const Prepared p = prepare(dir, task);
  if (p.split.test.empty()) throw Error("test split is empty");
  std::vector<int> y;
  for (const auto& s : p.split.test) y.push_back(s.label);
  const std::vector<double> scores = model_scores(dir, task, kind, p.split.test, p.scaler);
  std::vector<fs::path> files;
  json metrics{{"model", kind}, {"n_test", y.size()}};
  if (table == "roc") {
    const eval::Roc roc = eval::roc_auc(scores, y);
    write_roc(dir, roc, files);
    metrics["auc"] = roc.auc;
    std::cout << "AUC " << roc.auc << '\n';
  } else if (table == "doses") {
    if (task != tasks::Task::Risk) throw InvalidInput("doses table needs the risk task");
    const eval::DosesCaughtTable t = eval::doses_caught(p.split.test, scores);
    const auto row = [](const eval::CaughtRow& r) {
      return json{{"threshold", r.threshold}, {"true_positives", r.true_positives}, {"fpr", r.fpr},
                  {"doses_caught", r.doses_caught}};
    };
    write_json(dir / "doses_caught.json", {{"baseline", row(t.baseline)}, {"model", row(t.model)},
                                           {"tp_improvement", t.tp_improvement},
                                           {"doses_improvement", t.doses_improvement}});
    files.push_back(dir / "doses_caught.json");
    metrics["tp_improvement"] = t.tp_improvement;
    metrics["doses_improvement"] = t.doses_improvement;
    std::cout << "true positives change " << 100 * t.tp_improvement << "%, doses caught change " << 100 * t.doses_improvement << "%\n";
  } else if (table == "fpr") {
    const auto base = learn::heuristic_scores(learn::Heuristic::LwMisses, p.split.test);
    std::ofstream out(dir / "fpr_table.csv");
    out << "tpr,fpr_lw_misses,fpr_model,improvement\n";
    for (const auto& r : eval::fpr_matched_table(base, scores, y)) {
      out << r.tpr << ',' << r.fpr_a << ',' << r.fpr_b << ',' << r.improvement << '\n';
    }
    files.push_back(dir / "fpr_table.csv");
  } else if (table == "attribution") {
    if (kind != "leap") throw InvalidInput("attribution needs a leap model");
    const auto art = service::RiskArtifact::from_json(read_json(model_file(dir, task, kind)));
    std::vector<double> days(static_cast<std::size_t>(art.model.k()), 0.0);
    std::vector<double> feats(features::kFeatureCount, 0.0);
    for (const auto& s : p.split.test) {
      const eval::Attribution a = eval::occlusion_attribution(art.model, s, art.scaler, art.reference);
      for (std::size_t d = 0; d < days.size(); ++d) days[d] += std::abs(a.days[d]) / p.split.test.size();
      for (std::size_t f = 0; f < feats.size(); ++f) feats[f] += std::abs(a.features[f]) / p.split.test.size();
    }
    std::ofstream out(dir / "attribution.csv");
    out << "input,mean_abs_delta\n";
    for (std::size_t d = 0; d < days.size(); ++d) out << "day" << d + 1 << ',' << days[d] << '\n';
    for (std::size_t f = 0; f < feats.size(); ++f) {
      out << features::FeatureSchema::v1().features[f].name << ',' << feats[f] << '\n';
    }
    files.push_back(dir / "attribution.csv");
  } else {
    throw InvalidInput("unknown table kind " + table + " (roc, doses, fpr, attribution)");
  }
  record(dir, "eval:" + task_name(task) + ":" + kind + ":" + table, cfg, files, metrics);
  return 0;
}

int cmd_plan(const Common& c, std::optional<int> group_size, const std::string& kind) {
  RunConfig cfg = load_config(c);
  if (group_size) cfg.group_size = *group_size;
  const fs::path dir = c.dir;
  const Prepared p = prepare(dir, tasks::Task::Plan);
  const learn::Dataset test = learn::make_dataset(p.split.test, p.scaler, plan::kDays);
  const auto groups = plan::make_groups(p.split.test, cfg.group_size, cfg.split_seed + 1);
  if (groups.empty()) throw Error("fewer test samples than one group of " + std::to_string(cfg.group_size));
  std::optional<learn::LeapModel> model;
  if (kind != "lw_misses" && kind != "truth") {
    model = service::RiskArtifact::from_json(read_json(model_file(dir, tasks::Task::Plan, kind))).model;
  }
  const auto coefficients = [&](const plan::PlanGroup& g) {
    if (model) return plan::predict_coefficients(*model, test, g);
    return kind == "truth" ? g.truth : plan::lw_misses_coefficients(p.split.test, g, 1);
  };
  json out_groups = json::array();
  double total = 0.0, optimal = 0.0;
  for (const auto& g : groups) {
    plan::PlanInstance predicted = g.instance;
    predicted.reward = plan::aggregate(g.instance, coefficients(g));
    const plan::VisitPlan chosen = plan::solve_plan(predicted);
    const int reached = plan::evaluate_plan(chosen, g.truth, g.instance.patient_location);
    const int best = plan::realized_value(g.truth, g);
    total += reached;
    optimal += best;
    out_groups.push_back({{"instance", plan::to_json(predicted)},
                          {"plan", plan::to_json(chosen, predicted)},
                          {"objective", chosen.objective},
                          {"successful_interventions", reached},
                          {"optimal_interventions", best}});
  }
  const double n = static_cast<double>(groups.size());
  write_json(dir / "plans.json", {{"model", kind},
                                  {"group_size", cfg.group_size},
                                  {"groups", out_groups},
                                  {"mean_successful_interventions", total / n},
                                  {"mean_optimal_interventions", optimal / n}});
  record(dir, "plan:" + kind, cfg, {dir / "plans.json"},
         {{"groups", groups.size()}, {"mean_successful_interventions", total / n},
          {"mean_optimal_interventions", optimal / n}});
  std::cout << groups.size() << " groups, mean successful interventions " << total / n << " (optimal "
            << optimal / n << ")\n";
  return 0;
}

int cmd_dfl(const Common& c) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = c.dir;
  const Prepared p = prepare(dir, tasks::Task::Plan);
  const auto warm = service::RiskArtifact::from_json(read_json(model_file(dir, tasks::Task::Plan, "leap")));
  const learn::Dataset train = learn::make_dataset(p.split.train, p.scaler, plan::kDays);
  const auto groups = plan::make_groups(p.split.train, cfg.group_size, cfg.split_seed);
  const plan::DflResult r = plan::dfl_train(cfg.dfl, warm.model, train, groups);
  json artifact = service::RiskArtifact{r.model, warm.scaler, warm.reference}.to_json();
  artifact["soft_objective"] = r.soft_objective;
  artifact["hard_objective"] = r.hard_objective;
  const fs::path out = model_file(dir, tasks::Task::Plan, "dfl");
  write_json(out, artifact);
  record(dir, "dfl", cfg, {out},
         {{"train_groups", groups.size()}, {"hard_objective", r.hard_objective},
          {"finite_difference_fallbacks", r.warnings.size()}});
  std::cout << "decision-focused training: " << r.hard_objective.front() << " -> " << r.hard_objective.back()
            << " successful interventions per training group\n";
  return 0;
}

int cmd_serve(const Common& c, const std::string& host, int port, const std::string& today,
              std::optional<int> group_size) {
  const RunConfig cfg = load_config(c);
  service::ServiceOptions opt;
  opt.state_dir = c.dir;
  if (!today.empty()) opt.today = Date::parse(today);
  opt.group_size = group_size.value_or(cfg.group_size);
  service::ServiceState state(opt);
  std::cout << "serving " << c.dir << " on http://" << host << ':' << port << " (today " << state.today().iso()
            << ")\n"
            << std::flush;
  service::serve(state, host, port);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"adhere: adherence risk and visit planning engine"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--dir,--out", common.dir, "state directory")->capture_default_str();
    sub->add_option("--config", common.config, "JSON config file");
    sub->add_option("--seed", common.seed, "seed override");
  };
  const std::vector<std::string> task_names{"risk", "outcome", "lcfo", "plan"};
  std::string task_text = "risk";
  std::string kind = "leap";
  std::string table = "roc";
  std::string mode, as_of, host = "127.0.0.1", today;
  std::optional<int> patients, group_size;
  int port = 8080;

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic cohort");
  add_common(simulate);
  simulate->add_option("--patients", patients);
  simulate->add_option("--mode", mode, "proxy_respecting or adversarial");

  auto* ingest = app.add_subcommand("ingest", "load, dedupe and build calendars");
  add_common(ingest);
  ingest->add_option("--as-of", as_of, "YYYY-MM-DD end of data for ongoing patients");

  auto* label = app.add_subcommand("label", "generate task samples");
  add_common(label);
  label->add_option("--task", task_text)->check(CLI::IsMember(task_names))->required();

  auto* featurize = app.add_subcommand("featurize", "patient-level split and scaler");
  add_common(featurize);
  featurize->add_option("--task", task_text)->check(CLI::IsMember(task_names))->required();

  auto* train = app.add_subcommand("train", "fit a model on the training split");
  add_common(train);
  train->add_option("--task", task_text)->check(CLI::IsMember(task_names))->required();
  train->add_option("--model", kind, "leap, forest or logistic")->capture_default_str();

  auto* evaluate = app.add_subcommand("eval", "score the test split");
  add_common(evaluate);
  evaluate->add_option("--task", task_text)->check(CLI::IsMember(task_names))->capture_default_str();
  evaluate->add_option("--model", kind, "leap, forest, logistic, dfl or a heuristic")->capture_default_str();
  evaluate->add_option("--kind", table, "roc, doses, fpr or attribution")->capture_default_str();

  auto* planner = app.add_subcommand("plan", "weekly visit plans on the test groups");
  add_common(planner);
  planner->add_option("--group-size", group_size);
  planner->add_option("--model", kind, "leap, dfl, lw_misses or truth")->capture_default_str();

  auto* dfl = app.add_subcommand("dfl", "decision-focused fine-tuning of the plan model");
  add_common(dfl);

  auto* serve = app.add_subcommand("serve", "JSON API over a state directory");
  add_common(serve);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--today", today, "YYYY-MM-DD initial simulated date");
  serve->add_option("--group-size", group_size);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  const tasks::Task task = tasks::parse_task(task_text);
  try {
    if (*simulate) return cmd_simulate(common, patients, mode);
    if (*ingest) return cmd_ingest(common, as_of);
    if (*label) return cmd_label(common, task);
    if (*featurize) return cmd_featurize(common, task);
    if (*train) return cmd_train(common, task, kind);
    if (*evaluate) return cmd_eval(common, task, kind, table);
    if (*planner) return cmd_plan(common, group_size, kind);
    if (*dfl) return cmd_dfl(common);
    if (*serve) return cmd_serve(common, host, port, today, group_size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace adherence::cli
