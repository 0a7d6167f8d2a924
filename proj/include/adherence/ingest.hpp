#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adherence/attention.hpp"
#include "adherence/cohort.hpp"
#include "adherence/core.hpp"

namespace adherence::ingest {

struct RejectedRow {
  std::string file;
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

/// One call_log row. Calls are attributed through the phone map; manual rows
/// name their patient directly.
struct CallLogRow {
  std::string event_id;
  std::optional<std::string> phone;
  Timestamp timestamp;
  Date dose_date;
  DoseKind kind = DoseKind::Call;
  std::optional<std::string> marked_by;
  std::optional<std::string> patient_id;
  std::size_t line = 0;
};

struct PhoneMapRow {
  std::string phone;
  std::string patient_id;
  bool operator==(const PhoneMapRow&) const = default;
};

struct RawTables {
  std::vector<PatientRecord> patients;
  std::vector<CallLogRow> call_log;
  std::vector<PhoneMapRow> phone_map;
  std::vector<WorkerNote> patient_log;
  std::vector<RejectedRow> rejects;
};

/// Reads the four tables from `dir`. Malformed rows go to `rejects`; a
/// missing file or a header mismatch throws.
RawTables load_tables(const std::filesystem::path& dir);

struct DedupResult {
  RawTables tables;  // without shared phones and without removed patients
  std::vector<std::string> removed_phones;
  std::vector<std::string> removed_patients;
  double removed_fraction = 0.0;  // of the input patients
};

/// Drops phones registered to more than one patient. Every patient registered
/// to a shared phone that placed at least one call is removed entirely, since
/// those calls cannot be attributed.
DedupResult dedup_phones(const RawTables& tables);

struct JoinResult {
  std::map<std::string, std::vector<DoseEvent>> events;  // by patient id
  std::size_t dropped_unregistered = 0;   // calls from phones not in the map
  std::size_t dropped_unknown_patient = 0;  // manual rows naming an unknown patient
};

JoinResult join_calls(const RawTables& tables);

struct IngestReport {
  std::size_t patients_in = 0;
  std::size_t patients_out = 0;
  std::size_t call_rows = 0;
  std::size_t dropped_unregistered = 0;
  std::size_t dropped_unknown_patient = 0;
  std::vector<std::string> removed_patients;
  std::vector<std::string> removed_phones;
  double removed_fraction = 0.0;
  std::vector<RejectedRow> rejects;
};

struct IngestResult {
  Cohort cohort;
  IngestReport report;
};

/// load -> dedup -> join -> calendars -> attention. Events outside a
/// patient's span are rejected by event id rather than aborting the load.
IngestResult ingest_directory(const std::filesystem::path& dir,
                              std::optional<Date> as_of = std::nullopt,
                              const AttentionRules& rules = {});

IngestResult assemble(const RawTables& tables, std::optional<Date> as_of = std::nullopt,
                      const AttentionRules& rules = {});

}  // namespace adherence::ingest
