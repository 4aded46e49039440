// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aiql/common.hpp"

namespace aiql {

enum class EntityKind : std::uint8_t { File, Process, NetChannel };
inline constexpr std::size_t kEntityKindCount = 3;

enum class Operation : std::uint8_t {
  Read,
  Write,
  Execute,
  Start,
  End,
  Rename,
  Delete,
  Connect,
  Accept,
};
inline constexpr std::size_t kOperationCount = 9;

/// Derived from the object's kind; never stored.
enum class EventType : std::uint8_t { FileEvent, ProcessEvent, NetworkEvent };

/// Attribute value: numeric attributes (pid, ports) are integers, the rest strings.
using Value = std::variant<std::int64_t, std::string>;

std::string value_to_string(const Value& v);

using AttrMap = std::map<std::string, Value, std::less<>>;

struct Entity {
  EntityId id = 0;
  AgentId agent_id = 0;
  EntityKind kind = EntityKind::File;
  AttrMap attrs;

  /// Reads an attribute, including the `id` and `agentid` pseudo-attributes.
  std::optional<Value> attribute(std::string_view name) const;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Event {
  EventId id = 0;
  AgentId agent_id = 0;
  EntityId subject_id = 0;
  Operation op = Operation::Read;
  EntityId object_id = 0;
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;
  std::uint64_t seq = 0;
  std::optional<std::uint64_t> amount;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Total order used for every event stream: (start_ts, seq), then agent and id
/// so that events from different agents never compare equal.
inline std::strong_ordering event_order(const Event& a, const Event& b) {
  if (auto c = a.start_ts <=> b.start_ts; c != 0) return c;
  if (auto c = a.seq <=> b.seq; c != 0) return c;
  if (auto c = a.agent_id <=> b.agent_id; c != 0) return c;
  return a.id <=> b.id;
}

inline bool event_less(const Event& a, const Event& b) { return event_order(a, b) < 0; }

/// Small bitset over the nine operations.
class OpSet {
 public:
  constexpr OpSet() = default;
  constexpr OpSet(std::initializer_list<Operation> ops) {
    for (auto op : ops) insert(op);
  }
  static constexpr OpSet all() {
    OpSet s;
    s.bits_ = (1u << kOperationCount) - 1;
    return s;
  }

  constexpr void insert(Operation op) { bits_ |= bit(op); }
  constexpr bool contains(Operation op) const { return (bits_ & bit(op)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint16_t bits() const { return bits_; }
  std::vector<Operation> to_vector() const;

  friend constexpr bool operator==(OpSet, OpSet) = default;

 private:
  static constexpr std::uint16_t bit(Operation op) {
    return static_cast<std::uint16_t>(1u << static_cast<unsigned>(op));
  }
  std::uint16_t bits_ = 0;
};

std::string_view to_string(EntityKind kind);
std::string_view to_string(Operation op);
std::string_view to_string(EventType type);
std::optional<EntityKind> parse_entity_kind(std::string_view text);
std::optional<Operation> parse_operation(std::string_view text);

EventType event_type(EntityKind object_kind);
inline EventType event_type(const Event&, EntityKind object_kind) { return event_type(object_kind); }

/// Attribute a bare entity variable stands for in queries and result tables.
std::string_view default_attribute(EntityKind kind);

/// Operations an object of `kind` admits.
OpSet compatible_operations(EntityKind kind);
inline bool op_compatible(Operation op, EntityKind kind) {
  return compatible_operations(kind).contains(op);
}

/// Attributes that make up an entity's dedup key (together with agent and kind).
std::span<const std::string_view> identity_attributes(EntityKind kind);

/// Every attribute an entity of `kind` may carry, in canonical order.
std::span<const std::string_view> known_attributes(EntityKind kind);

bool is_numeric_attribute(std::string_view name);

/// Maps accepted spellings (`dstip`, `exe`, ...) to canonical attribute names.
/// Returns the input unchanged when it is not an alias.
std::string_view canonical_attribute(std::string_view name);

/// Checks every event invariant; an empty result means the event is valid.
std::vector<std::string> validate_event(const Event& e, const Entity& subject, const Entity& object);

}  // namespace aiql
