// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/event_model.hpp"

#include <algorithm>

namespace aiql {

namespace {

constexpr std::array<std::string_view, kOperationCount> kOpNames = {
    "read", "write", "execute", "start", "end", "rename", "delete", "connect", "accept"};

constexpr std::array<std::string_view, 1> kFileIdentity = {"name"};
constexpr std::array<std::string_view, 2> kProcessIdentity = {"pid", "exe_name"};
constexpr std::array<std::string_view, 5> kNetIdentity = {"src_ip", "src_port", "dst_ip", "dst_port",
                                                          "protocol"};

constexpr std::array<std::string_view, 1> kFileAttrs = {"name"};
constexpr std::array<std::string_view, 4> kProcessAttrs = {"pid", "exe_name", "user", "cmd"};

}  // namespace

std::string value_to_string(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

std::optional<Value> Entity::attribute(std::string_view name) const {
  if (name == "id") return Value{static_cast<std::int64_t>(id)};
  if (name == "agentid") return Value{static_cast<std::int64_t>(agent_id)};
  auto it = attrs.find(name);
  if (it == attrs.end()) return std::nullopt;
  return it->second;
}

std::vector<Operation> OpSet::to_vector() const {
  std::vector<Operation> out;
  for (std::size_t i = 0; i < kOperationCount; ++i) {
    auto op = static_cast<Operation>(i);
    if (contains(op)) out.push_back(op);
  }
  return out;
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::File: return "file";
    case EntityKind::Process: return "process";
    case EntityKind::NetChannel: return "netchannel";
  }
  return "?";
}

std::string_view to_string(Operation op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::FileEvent: return "file_event";
    case EventType::ProcessEvent: return "process_event";
    case EventType::NetworkEvent: return "network_event";
  }
  return "?";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  if (text == "file") return EntityKind::File;
  if (text == "process" || text == "proc") return EntityKind::Process;
  if (text == "netchannel" || text == "ip") return EntityKind::NetChannel;
  return std::nullopt;
}

std::optional<Operation> parse_operation(std::string_view text) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == text) return static_cast<Operation>(i);
  return std::nullopt;
}

EventType event_type(EntityKind object_kind) {
  switch (object_kind) {
    case EntityKind::File: return EventType::FileEvent;
    case EntityKind::Process: return EventType::ProcessEvent;
    case EntityKind::NetChannel: return EventType::NetworkEvent;
  }
  return EventType::FileEvent;
}

std::string_view default_attribute(EntityKind kind) {
  switch (kind) {
    case EntityKind::File: return "name";
    case EntityKind::Process: return "exe_name";
    case EntityKind::NetChannel: return "dst_ip";
  }
  return "name";
}

OpSet compatible_operations(EntityKind kind) {
  using enum Operation;
  switch (kind) {
    case EntityKind::File: return {Read, Write, Execute, Rename, Delete};
    case EntityKind::Process: return {Start, End, Connect};
    case EntityKind::NetChannel: return {Read, Write, Connect, Accept};
  }
  return {};
}

std::span<const std::string_view> identity_attributes(EntityKind kind) {
  switch (kind) {
    case EntityKind::File: return kFileIdentity;
    case EntityKind::Process: return kProcessIdentity;
    case EntityKind::NetChannel: return kNetIdentity;
  }
  return {};
}

std::span<const std::string_view> known_attributes(EntityKind kind) {
  switch (kind) {
    case EntityKind::File: return kFileAttrs;
    case EntityKind::Process: return kProcessAttrs;
    case EntityKind::NetChannel: return kNetIdentity;
  }
  return {};
}

bool is_numeric_attribute(std::string_view name) {
  return name == "pid" || name == "src_port" || name == "dst_port" || name == "id" || name == "agentid";
}

std::string_view canonical_attribute(std::string_view name) {
  if (name == "dstip") return "dst_ip";
  if (name == "srcip") return "src_ip";
  if (name == "dstport") return "dst_port";
  if (name == "srcport") return "src_port";
  if (name == "exe") return "exe_name";
  if (name == "agent_id") return "agentid";
  return name;
}

std::vector<std::string> validate_event(const Event& e, const Entity& subject, const Entity& object) {
  std::vector<std::string> out;
  if (e.start_ts > e.end_ts) out.emplace_back("start_ts after end_ts");
  if (subject.kind != EntityKind::Process) out.emplace_back("subject must be Process");
  if (e.subject_id != subject.id) out.emplace_back("subject id mismatch");
  if (e.object_id != object.id) out.emplace_back("object id mismatch");
  if (!op_compatible(e.op, object.kind)) out.emplace_back("op incompatible with object kind");
  bool transfer = e.op == Operation::Read || e.op == Operation::Write;
  if (e.amount && !transfer) out.emplace_back("amount only allowed on read/write");
  if (subject.agent_id != e.agent_id) out.emplace_back("subject belongs to another agent");
  // A connect to a process is the one cross-host edge.
  bool cross_host_ok = e.op == Operation::Connect && object.kind == EntityKind::Process;
  if (object.agent_id != e.agent_id && !cross_host_ok)
    out.emplace_back("object belongs to another agent");
  return out;
}

}  // namespace aiql
