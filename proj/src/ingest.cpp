#include "adherence/ingest.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "adherence/csv.hpp"

namespace adherence::ingest {

namespace {

const csv::Row kPatientsHeader{"patient_id", "enrollment_date", "end_date", "gender", "age_band",
                               "weight_band", "center_id", "tb_unit_id", "outcome"};
const csv::Row kCallLogHeader{"event_id", "phone", "timestamp", "dose_date", "kind", "marked_by"};
const csv::Row kCallLogHeaderWithPatient{"event_id", "phone",     "timestamp", "dose_date",
                                         "kind",     "marked_by", "patient_id"};
const csv::Row kPhoneMapHeader{"phone", "patient_id"};
const csv::Row kPatientLogHeader{"note_id", "patient_id", "worker_id", "unit_id", "action",
                                 "timestamp"};

std::optional<std::string> non_empty(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

int parse_band(const std::string& s, int bands, const char* what) {
  std::size_t used = 0;
  int v = -1;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v < 0 || v >= bands) {
    throw InvalidInput(std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

csv::Table read_checked(const std::filesystem::path& path, const std::vector<csv::Row>& headers) {
  if (!std::filesystem::exists(path)) throw Error("missing table " + path.string());
  csv::Table table = csv::read_file(path);
  if (std::find(headers.begin(), headers.end(), table.header) == headers.end()) {
    throw InvalidInput("schema mismatch in " + path.filename().string());
  }
  return table;
}

template <typename Parse>
void parse_rows(const csv::Table& table, const std::string& file, std::vector<RejectedRow>& rejects,
                Parse&& parse) {
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const csv::Row& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() != table.header.size()) {
      rejects.push_back({file, line,
                         "expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(row.size())});
      continue;
    }
    try {
      parse(row, line);
    } catch (const InvalidInput& e) {
      rejects.push_back({file, line, e.what()});
    }
  }
}

}  // namespace

RawTables load_tables(const std::filesystem::path& dir) {
  RawTables t;

  const auto patients = read_checked(dir / "patients.csv", {kPatientsHeader});
  parse_rows(patients, "patients.csv", t.rejects, [&](const csv::Row& row, std::size_t) {
    PatientRecord p;
    p.patient_id = row[0];
    p.enrollment_date = Date::parse(row[1]);
    if (!row[2].empty()) p.end_date = Date::parse(row[2]);
    p.gender = parse_gender(row[3]);
    p.age_band = parse_band(row[4], kAgeBands, "age_band");
    p.weight_band = parse_band(row[5], kWeightBands, "weight_band");
    p.center_id = row[6];
    p.tb_unit_id = row[7];
    p.outcome = parse_outcome(row[8]);
    if (p.center_id.empty() || p.tb_unit_id.empty()) throw InvalidInput("empty center or unit id");
    p.validate();
    t.patients.push_back(std::move(p));
  });

  const auto calls = read_checked(dir / "call_log.csv", {kCallLogHeader, kCallLogHeaderWithPatient});
  const bool has_patient_column = calls.header.size() == kCallLogHeaderWithPatient.size();
  parse_rows(calls, "call_log.csv", t.rejects, [&](const csv::Row& row, std::size_t line) {
    CallLogRow c;
    c.event_id = row[0];
    if (c.event_id.empty()) throw InvalidInput("empty event_id");
    c.phone = non_empty(row[1]);
    c.timestamp = Timestamp::parse(row[2]);
    c.dose_date = Date::parse(row[3]);
    c.kind = parse_dose_kind(row[4]);
    c.marked_by = non_empty(row[5]);
    if (has_patient_column) c.patient_id = non_empty(row[6]);
    c.line = line;
    if (c.kind == DoseKind::Call) {
      if (!c.phone) throw InvalidInput("call " + c.event_id + " without phone");
      if (c.timestamp.date != c.dose_date) {
        throw InvalidInput("call " + c.event_id + " timestamp date differs from dose date");
      }
    } else if (!c.patient_id) {
      throw InvalidInput("manual row " + c.event_id + " does not name a patient");
    }
    t.call_log.push_back(std::move(c));
  });

  const auto phones = read_checked(dir / "phone_map.csv", {kPhoneMapHeader});
  parse_rows(phones, "phone_map.csv", t.rejects, [&](const csv::Row& row, std::size_t) {
    if (row[0].empty() || row[1].empty()) throw InvalidInput("empty phone or patient id");
    t.phone_map.push_back({row[0], row[1]});
  });

  const auto notes = read_checked(dir / "patient_log.csv", {kPatientLogHeader});
  parse_rows(notes, "patient_log.csv", t.rejects, [&](const csv::Row& row, std::size_t) {
    if (row[0].empty() || row[1].empty()) throw InvalidInput("empty note or patient id");
    t.patient_log.push_back(WorkerNote{row[0], row[1], row[2], row[3], row[4],
                                       Timestamp::parse(row[5])});
  });
  return t;
}

DedupResult dedup_phones(const RawTables& tables) {
  std::unordered_map<std::string, std::set<std::string>> owners;
  for (const PhoneMapRow& r : tables.phone_map) owners[r.phone].insert(r.patient_id);

  std::unordered_set<std::string> calling_phones;
  for (const CallLogRow& c : tables.call_log) {
    if (c.kind == DoseKind::Call && c.phone) calling_phones.insert(*c.phone);
  }

  std::set<std::string> shared;
  std::set<std::string> removed;
  for (const auto& [phone, pids] : owners) {
    if (pids.size() < 2) continue;
    shared.insert(phone);
    if (calling_phones.count(phone)) removed.insert(pids.begin(), pids.end());
  }

  DedupResult out;
  out.removed_phones.assign(shared.begin(), shared.end());
  out.removed_patients.assign(removed.begin(), removed.end());
  out.removed_fraction = tables.patients.empty()
                             ? 0.0
                             : static_cast<double>(removed.size()) / tables.patients.size();

  std::unordered_set<std::string> dropped_phones(shared.begin(), shared.end());
  for (const PhoneMapRow& r : tables.phone_map) {
    if (removed.count(r.patient_id)) dropped_phones.insert(r.phone);
  }

  RawTables& t = out.tables;
  t.rejects = tables.rejects;
  for (const PatientRecord& p : tables.patients) {
    if (!removed.count(p.patient_id)) t.patients.push_back(p);
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const PhoneMapRow& r : tables.phone_map) {
    if (dropped_phones.count(r.phone)) continue;
    if (seen.insert({r.phone, r.patient_id}).second) t.phone_map.push_back(r);
  }
  for (const CallLogRow& c : tables.call_log) {
    if (c.kind == DoseKind::Call && dropped_phones.count(*c.phone)) continue;
    if (c.kind == DoseKind::Manual && removed.count(*c.patient_id)) continue;
    t.call_log.push_back(c);
  }
  for (const WorkerNote& n : tables.patient_log) {
    if (!removed.count(n.patient_id)) t.patient_log.push_back(n);
  }
  return out;
}

JoinResult join_calls(const RawTables& tables) {
  std::unordered_set<std::string> known;
  for (const PatientRecord& p : tables.patients) known.insert(p.patient_id);
  std::unordered_map<std::string, std::string> owner;
  for (const PhoneMapRow& r : tables.phone_map) owner.emplace(r.phone, r.patient_id);

  JoinResult out;
  for (const CallLogRow& c : tables.call_log) {
    DoseEvent e;
    e.event_id = c.event_id;
    e.dose_date = c.dose_date;
    e.kind = c.kind;
    e.timestamp = c.timestamp;
    e.marked_by = c.marked_by;
    if (c.kind == DoseKind::Call) {
      const auto it = owner.find(*c.phone);
      if (it == owner.end()) {
        ++out.dropped_unregistered;
        continue;
      }
      e.patient_id = it->second;
      e.phone = c.phone;
    } else {
      e.patient_id = *c.patient_id;
    }
    if (!known.count(e.patient_id)) {
      ++out.dropped_unknown_patient;
      continue;
    }
    out.events[e.patient_id].push_back(std::move(e));
  }
  return out;
}

IngestResult assemble(const RawTables& tables, std::optional<Date> as_of,
                      const AttentionRules& rules) {
  const DedupResult dedup = dedup_phones(tables);
  const JoinResult joined = join_calls(dedup.tables);

  IngestResult out;
  IngestReport& rep = out.report;
  rep.patients_in = tables.patients.size();
  rep.call_rows = tables.call_log.size();
  rep.dropped_unregistered = joined.dropped_unregistered;
  rep.dropped_unknown_patient = joined.dropped_unknown_patient;
  rep.removed_patients = dedup.removed_patients;
  rep.removed_phones = dedup.removed_phones;
  rep.removed_fraction = dedup.removed_fraction;
  rep.rejects = dedup.tables.rejects;

  std::unordered_map<std::string, std::size_t> line_of;
  for (const CallLogRow& c : dedup.tables.call_log) line_of.emplace(c.event_id, c.line);
  std::unordered_map<std::string, std::vector<WorkerNote>> notes;
  for (const WorkerNote& n : dedup.tables.patient_log) notes[n.patient_id].push_back(n);

  for (const PatientRecord& p : dedup.tables.patients) {
    std::optional<Date> end = p.end_date ? p.end_date : as_of;
    if (!end) {
      rep.rejects.push_back({"patients.csv", 0,
                             "patient " + p.patient_id + " is Ongoing and no as-of date was given"});
      continue;
    }
    if (*end < p.enrollment_date) {
      rep.rejects.push_back({"patients.csv", 0, "patient " + p.patient_id + " ends before as-of"});
      continue;
    }
    std::vector<DoseEvent> events;
    if (const auto it = joined.events.find(p.patient_id); it != joined.events.end()) {
      for (const DoseEvent& e : it->second) {
        if (e.dose_date < p.enrollment_date || e.dose_date > *end) {
          rep.rejects.push_back({"call_log.csv", line_of[e.event_id],
                                 "event " + e.event_id + " outside treatment span of " + p.patient_id});
          continue;
        }
        events.push_back(e);
      }
    }
    std::vector<WorkerNote> kept;
    for (const WorkerNote& n : notes[p.patient_id]) {
      if (n.timestamp.date < p.enrollment_date - 30 || n.timestamp.date > *end + 30) {
        rep.rejects.push_back({"patient_log.csv", 0,
                               "note " + n.note_id + " outside the 30-day margin of " + p.patient_id});
        continue;
      }
      kept.push_back(n);
    }
    AdherenceCalendar cal = build_calendar(p, events, as_of);
    out.cohort.push_back(make_history(p, std::move(cal), std::move(kept), rules));
  }
  rep.patients_out = out.cohort.size();
  return out;
}

IngestResult ingest_directory(const std::filesystem::path& dir, std::optional<Date> as_of,
                              const AttentionRules& rules) {
  return assemble(load_tables(dir), as_of, rules);
}

}  // namespace adherence::ingest
