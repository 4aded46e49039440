// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/codec.hpp"

namespace aiql {

nlohmann::json value_to_json(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  throw Error("attribute values must be integers or strings");
}

nlohmann::json to_json(const Entity& e) {
  nlohmann::json j = nlohmann::json::object();
  j["id"] = e.id;
  j["agent_id"] = e.agent_id;
  j["kind"] = std::string(to_string(e.kind));
  for (const auto& [k, v] : e.attrs) j[k] = value_to_json(v);
  return j;
}

nlohmann::json to_json(const Event& e) {
  nlohmann::json j = nlohmann::json::object();
  j["id"] = e.id;
  j["agent_id"] = e.agent_id;
  j["subject_id"] = e.subject_id;
  j["op"] = std::string(to_string(e.op));
  j["object_id"] = e.object_id;
  j["start_ts"] = e.start_ts;
  j["end_ts"] = e.end_ts;
  j["seq"] = e.seq;
  if (e.amount) j["amount"] = *e.amount;
  return j;
}

Entity entity_from_json(const nlohmann::json& j) {
  Entity e;
  e.id = j.at("id").get<EntityId>();
  e.agent_id = j.at("agent_id").get<AgentId>();
  auto kind = parse_entity_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error("unknown entity kind");
  e.kind = *kind;
  for (const auto& [k, v] : j.items()) {
    if (k == "id" || k == "agent_id" || k == "kind") continue;
    e.attrs.emplace(k, value_from_json(v));
  }
  return e;
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  e.id = j.at("id").get<EventId>();
  e.agent_id = j.at("agent_id").get<AgentId>();
  e.subject_id = j.at("subject_id").get<EntityId>();
  auto op = parse_operation(j.at("op").get<std::string>());
  if (!op) throw Error("unknown operation");
  e.op = *op;
  e.object_id = j.at("object_id").get<EntityId>();
  e.start_ts = j.at("start_ts").get<Timestamp>();
  e.end_ts = j.at("end_ts").get<Timestamp>();
  e.seq = j.at("seq").get<std::uint64_t>();
  if (auto it = j.find("amount"); it != j.end() && !it->is_null()) e.amount = it->get<std::uint64_t>();
  return e;
}

}  // namespace aiql
