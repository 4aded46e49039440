// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/ingest.hpp"

#include <fstream>
#include <unordered_map>

#include "aiql/codec.hpp"

namespace aiql {

namespace {

struct PendingRecord {
  AgentId agent = 0;
  AttrMap subject;
  AgentId object_agent = 0;
  EntityKind object_kind = EntityKind::File;
  AttrMap object;
  EventDraft draft;
};

/// Thrown for a line that cannot be ingested; the message is the reject reason.
struct Reject {
  std::string reason;
};

std::uint64_t unsigned_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw Reject{std::string("missing field ") + name};
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
    throw Reject{std::string("field ") + name + " must be an unsigned integer"};
  return it->get<std::uint64_t>();
}

Timestamp timestamp_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw Reject{std::string("missing field ") + name};
  if (!it->is_number_integer()) throw Reject{std::string("field ") + name + " must be an integer (epoch ms)"};
  return it->get<Timestamp>();
}

AttrMap attributes(const nlohmann::json& j, EntityKind kind, const char* where) {
  AttrMap attrs;
  auto known = known_attributes(kind);
  for (const auto& [key, value] : j.items()) {
    if (key == "kind" || key == "agent_id") continue;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Reject{"unknown attribute '" + key + "' in " + where};
    if (is_numeric_attribute(key)) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
        throw Reject{"attribute '" + key + "' in " + where + " must be an unsigned integer"};
      attrs.emplace(key, value.get<std::int64_t>());
    } else {
      if (!value.is_string()) throw Reject{"attribute '" + key + "' in " + where + " must be a string"};
      attrs.emplace(key, value.get<std::string>());
    }
  }
  for (auto id : identity_attributes(kind)) {
    auto it = attrs.find(id);
    if (it == attrs.end()) throw Reject{std::string(where) + " is missing identity attribute '" + std::string(id) + "'"};
    if (const auto* s = std::get_if<std::string>(&it->second); s && s->empty() && id != "protocol")
      throw Reject{std::string(where) + " has an empty identity attribute '" + std::string(id) + "'"};
  }
  return attrs;
}

PendingRecord parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw Reject{"malformed JSON"};
  }
  if (!j.is_object()) throw Reject{"record must be a JSON object"};

  PendingRecord r;
  r.agent = static_cast<AgentId>(unsigned_field(j, "agent_id"));
  r.draft.agent_id = r.agent;
  r.draft.start_ts = timestamp_field(j, "ts_start");
  r.draft.end_ts = timestamp_field(j, "ts_end");
  r.draft.seq = unsigned_field(j, "seq");

  auto op_it = j.find("op");
  if (op_it == j.end()) throw Reject{"missing field op"};
  if (!op_it->is_string()) throw Reject{"field op must be a string"};
  auto op = parse_operation(op_it->get<std::string>());
  if (!op) throw Reject{"unknown operation '" + op_it->get<std::string>() + "'"};
  r.draft.op = *op;

  auto subject = j.find("subject");
  if (subject == j.end() || !subject->is_object()) throw Reject{"missing subject object"};
  r.subject = attributes(*subject, EntityKind::Process, "subject");

  auto object = j.find("object");
  if (object == j.end() || !object->is_object()) throw Reject{"missing object"};
  auto kind_it = object->find("kind");
  if (kind_it == object->end() || !kind_it->is_string()) throw Reject{"object is missing kind"};
  auto kind = parse_entity_kind(kind_it->get<std::string>());
  if (!kind) throw Reject{"unknown object kind '" + kind_it->get<std::string>() + "'"};
  r.object_kind = *kind;
  r.object_agent = object->contains("agent_id") ? static_cast<AgentId>(unsigned_field(*object, "agent_id")) : r.agent;
  r.object = attributes(*object, *kind, "object");

  if (auto a = j.find("amount"); a != j.end() && !a->is_null()) r.draft.amount = unsigned_field(j, "amount");

  Entity s{0, r.agent, EntityKind::Process, r.subject};
  Entity o{0, r.object_agent, r.object_kind, r.object};
  Event probe{0, r.agent, 0, r.draft.op, 0, r.draft.start_ts, r.draft.end_ts, r.draft.seq, r.draft.amount};
  auto violations = validate_event(probe, s, o);
  if (!violations.empty()) {
    std::string reason;
    for (const auto& v : violations) reason += (reason.empty() ? "" : "; ") + v;
    throw Reject{reason};
  }
  return r;
}

void commit(std::vector<PendingRecord>& batch, EventStore& store, IngestReport& report) {
  if (batch.empty()) return;
  std::vector<EventDraft> drafts;
  drafts.reserve(batch.size());
  try {
    for (auto& r : batch) {
      r.draft.subject_id = store.upsert_entity(r.agent, EntityKind::Process, std::move(r.subject));
      r.draft.object_id = store.upsert_entity(r.object_agent, r.object_kind, std::move(r.object));
      drafts.push_back(r.draft);
    }
    report.committed += store.append_batch(drafts);
  } catch (const StoreError& e) {
    throw IoError(std::string("batch commit failed: ") + e.what());
  }
  batch.clear();
}

}  // namespace

IngestReport ingest_stream(std::istream& in, EventStore& store, const IngestOptions& options) {
  if (options.batch_size == 0) throw InvalidConfig("batch size must be positive");
  IngestReport report;
  std::vector<PendingRecord> batch;
  std::unordered_map<AgentId, std::uint64_t> last_seq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      PendingRecord r = parse_record(line);
      auto [it, fresh] = last_seq.try_emplace(r.agent, r.draft.seq);
      if (!fresh) {
        if (r.draft.seq <= it->second)
          throw Reject{"seq " + std::to_string(r.draft.seq) + " does not increase for agent " +
                       std::to_string(r.agent)};
        it->second = r.draft.seq;
      }
      batch.push_back(std::move(r));
    } catch (const Reject& reject) {
      report.rejected.push_back({line_no, reject.reason});
      continue;
    }
    if (batch.size() >= options.batch_size) commit(batch, store, report);
  }
  if (in.bad()) throw IoError("read error at line " + std::to_string(line_no + 1));
  commit(batch, store, report);
  store.flush();
  return report;
}

IngestReport ingest_file(const std::filesystem::path& path, EventStore& store, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return ingest_stream(in, store, options);
}

nlohmann::json raw_record(const Event& e, const Entity& subject, const Entity& object) {
  nlohmann::json j;
  j["agent_id"] = e.agent_id;
  j["ts_start"] = e.start_ts;
  j["ts_end"] = e.end_ts;
  j["seq"] = e.seq;
  j["op"] = std::string(to_string(e.op));
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [k, v] : subject.attrs) s[k] = value_to_json(v);
  j["subject"] = s;
  nlohmann::json o = nlohmann::json::object();
  o["kind"] = std::string(to_string(object.kind));
  if (object.agent_id != e.agent_id) o["agent_id"] = object.agent_id;
  for (const auto& [k, v] : object.attrs) o[k] = value_to_json(v);
  j["object"] = o;
  if (e.amount) j["amount"] = *e.amount;
  return j;
}

}  // namespace aiql
