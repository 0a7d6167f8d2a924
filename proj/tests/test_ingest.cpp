#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "adherence/ingest.hpp"
#include "adherence/simkit.hpp"

using namespace adherence;
using namespace adherence::ingest;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& file, const std::string& text) const {
    std::ofstream(path / file) << text;
  }
};

const char* kPatients = "patient_id,enrollment_date,end_date,gender,age_band,weight_band,center_id,tb_unit_id,outcome\n";
const char* kCalls = "event_id,phone,timestamp,dose_date,kind,marked_by,patient_id\n";
const char* kPhones = "phone,patient_id\n";
const char* kNotes = "note_id,patient_id,worker_id,unit_id,action,timestamp\n";

std::string patient_row(int i) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "P%03d,2018-01-01,2018-01-20,F,1,1,C1,U0,Cured\n", i);
  return buf;
}

// 100 patients with one phone each; phones S0..S4 are each shared by a pair,
// and all but S4 placed a call.
TempDir shared_fixture() {
  TempDir d("adh_ingest_shared");
  std::string patients = kPatients, phones = kPhones, calls = kCalls;
  for (int i = 0; i < 100; ++i) {
    patients += patient_row(i);
    char buf[64];
    std::snprintf(buf, sizeof buf, "9%03d,P%03d\n", i, i);
    phones += buf;
    std::snprintf(buf, sizeof buf, "E%03d,9%03d,2018-01-02T09:00,2018-01-02,call,,\n", i, i);
    calls += buf;
  }
  for (int s = 0; s < 5; ++s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "S%d,P%03d\nS%d,P%03d\n", s, 2 * s, s, 2 * s + 1);
    phones += buf;
    if (s < 4) {
      std::snprintf(buf, sizeof buf, "ES%d,S%d,2018-01-03T09:00,2018-01-03,call,,\n", s, s);
      calls += buf;
    }
  }
  d.write("patients.csv", patients);
  d.write("phone_map.csv", phones);
  d.write("call_log.csv", calls);
  d.write("patient_log.csv", kNotes);
  return d;
}

}  // namespace

TEST(Ingest, RoundTripsSimulatedExport) {
  sim::SimConfig c;
  c.n_patients = 80;
  c.seed = 3;
  c.stray_calls = 7;
  const auto s = sim::simulate_cohort(c);
  TempDir d("adh_ingest_roundtrip");
  sim::export_dataset(s, d.path);
  const IngestResult r = ingest_directory(d.path);
  EXPECT_EQ(r.report.dropped_unregistered, 7u);
  EXPECT_TRUE(r.report.removed_patients.empty());
  EXPECT_TRUE(r.report.rejects.empty());

  const Cohort expect = sim::to_cohort(s);
  ASSERT_EQ(r.cohort.size(), expect.size());
  std::map<std::string, const PatientHistory*> by_id;
  for (const auto& h : expect) by_id[h.record.patient_id] = &h;
  for (const auto& h : r.cohort) {
    const PatientHistory& e = *by_id.at(h.record.patient_id);
    EXPECT_EQ(h.record, e.record);
    EXPECT_EQ(h.calendar.adherence_string(), e.calendar.adherence_string());
    EXPECT_EQ(h.timeline, e.timeline);
  }
}

TEST(Ingest, SharedPhonesRemoveCallingPatients) {
  const TempDir d = shared_fixture();
  const IngestResult r = ingest_directory(d.path);
  EXPECT_EQ(r.report.patients_in, 100u);
  EXPECT_EQ(r.report.patients_out, 92u);
  EXPECT_EQ(r.report.removed_patients.size(), 8u);
  EXPECT_EQ(r.report.removed_phones.size(), 5u);
  EXPECT_DOUBLE_EQ(r.report.removed_fraction, 0.08);
  // P008 and P009 share S4, which never called; they stay with their own phones.
  bool kept8 = false;
  for (const auto& h : r.cohort) {
    EXPECT_NE(h.record.patient_id, "P000");
    if (h.record.patient_id == "P008") {
      kept8 = true;
      EXPECT_EQ(h.calendar.status(1), DayStatus::TakenCall);
    }
  }
  EXPECT_TRUE(kept8);
}

TEST(Ingest, DedupIsIdempotent) {
  const TempDir d = shared_fixture();
  const RawTables t = load_tables(d.path);
  const DedupResult once = dedup_phones(t);
  const DedupResult twice = dedup_phones(once.tables);
  EXPECT_TRUE(twice.removed_patients.empty());
  EXPECT_TRUE(twice.removed_phones.empty());
  EXPECT_EQ(twice.tables.patients, once.tables.patients);
  EXPECT_EQ(twice.tables.phone_map, once.tables.phone_map);
  EXPECT_EQ(twice.tables.call_log.size(), once.tables.call_log.size());
}

TEST(Ingest, UnregisteredCallsAreDropped) {
  TempDir d("adh_ingest_unreg");
  d.write("patients.csv", std::string(kPatients) + patient_row(1));
  d.write("phone_map.csv", std::string(kPhones) + "555,P001\n");
  d.write("call_log.csv", std::string(kCalls) +
                              "E1,555,2018-01-01T08:00,2018-01-01,call,,\n"
                              "E2,777,2018-01-02T08:00,2018-01-02,call,,\n"
                              "E3,,2018-01-03T18:00,2018-01-03,manual,W1,P001\n"
                              "E4,,2018-01-03T18:00,2018-01-03,manual,W1,P999\n");
  d.write("patient_log.csv", kNotes);
  const IngestResult r = ingest_directory(d.path);
  EXPECT_EQ(r.report.dropped_unregistered, 1u);
  EXPECT_EQ(r.report.dropped_unknown_patient, 1u);
  ASSERT_EQ(r.cohort.size(), 1u);
  EXPECT_EQ(r.cohort[0].calendar.adherence_string().substr(0, 4), "10m0");
}

TEST(Ingest, RejectsCarryLineNumbers) {
  TempDir d("adh_ingest_rejects");
  d.write("patients.csv", std::string(kPatients) + patient_row(1) +
                              "P002,2018-02-30,,F,1,1,C1,U0,Ongoing\n"
                              "P003,2018-01-01,2018-01-10,F,9,1,C1,U0,Cured\n");
  d.write("phone_map.csv", std::string(kPhones) + "555,P001\n");
  d.write("call_log.csv", std::string(kCalls) +
                              "E1,555,2018-01-01T08:00,2018-01-01,call,,\n"
                              "E2,555,2018-01-01T08:00,2018-01-02,call,,\n"
                              "E3,555,2018-03-01T08:00,2018-03-01,call,,\n"
                              "E4,555,bad,2018-01-01,call\n");
  d.write("patient_log.csv", kNotes);
  const IngestResult r = ingest_directory(d.path);
  ASSERT_EQ(r.cohort.size(), 1u);
  std::map<std::pair<std::string, std::size_t>, std::string> rejects;
  for (const auto& x : r.report.rejects) rejects[{x.file, x.line}] = x.reason;
  EXPECT_TRUE(rejects.count({"patients.csv", 3}));
  EXPECT_TRUE(rejects.count({"patients.csv", 4}));
  EXPECT_TRUE(rejects.count({"call_log.csv", 3}));
  EXPECT_TRUE(rejects.count({"call_log.csv", 5}));
  ASSERT_TRUE(rejects.count({"call_log.csv", 4}));
  EXPECT_NE((rejects[{"call_log.csv", 4}].find("E3")), std::string::npos);
}

TEST(Ingest, EmptyCallLogGivesAllMissed) {
  TempDir d("adh_ingest_empty");
  d.write("patients.csv", std::string(kPatients) + patient_row(1));
  d.write("phone_map.csv", kPhones);
  d.write("call_log.csv", kCalls);
  d.write("patient_log.csv", kNotes);
  const IngestResult r = ingest_directory(d.path);
  ASSERT_EQ(r.cohort.size(), 1u);
  EXPECT_EQ(r.cohort[0].calendar.count(DayStatus::Missed), 20);
}

TEST(Ingest, MissingFileOrBadHeaderThrows) {
  TempDir d("adh_ingest_missing");
  EXPECT_THROW(load_tables(d.path), Error);
  d.write("patients.csv", "id,date\n");
  d.write("phone_map.csv", kPhones);
  d.write("call_log.csv", kCalls);
  d.write("patient_log.csv", kNotes);
  EXPECT_THROW(load_tables(d.path), Error);
}
