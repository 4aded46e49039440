// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "aiql/event_model.hpp"
#include "aiql/predicate.hpp"

namespace aiql {

class StoreError : public Error {
 public:
  using Error::Error;
};

class MissingIdentityAttribute : public StoreError {
 public:
  using StoreError::StoreError;
};

class UnknownEntityId : public StoreError {
 public:
  using StoreError::StoreError;
};

class InvalidEvent : public StoreError {
 public:
  using StoreError::StoreError;
};

class OutOfOrderSeq : public StoreError {
 public:
  using StoreError::StoreError;
};

/// Events are partitioned by host and UTC day.
struct PartitionKey {
  AgentId agent_id = 0;
  std::int64_t day = 0;

  friend auto operator<=>(const PartitionKey&, const PartitionKey&) = default;
};

inline PartitionKey partition_key(AgentId agent, Timestamp start_ts) {
  return {agent, floor_div(start_ts, kMillisPerDay)};
}

/// Everything a per-pattern scan can constrain. Unset optionals do not
/// constrain; an empty agent list matches nothing.
struct ScanPredicate {
  TimeRange time;
  std::optional<std::vector<AgentId>> agents;
  std::optional<OpSet> ops;
  std::optional<EntityKind> object_kind;
  Predicate subject;
  Predicate object;
  /// Sorted id restrictions, produced by binding propagation.
  std::optional<std::vector<EntityId>> subject_ids;
  std::optional<std::vector<EntityId>> object_ids;
  /// Per-id start_ts ranges, also from propagation. Unlisted ids are unrestricted.
  std::optional<std::map<EntityId, TimeRange>> subject_times;
  std::optional<std::map<EntityId, TimeRange>> object_times;
};

/// Full predicate check for one event with its resolved entities.
bool matches(const ScanPredicate& pred, const Event& e, const Entity& subject, const Entity& object);

struct ScanStats {
  std::uint64_t examined = 0;
  std::uint64_t matched = 0;

  ScanStats& operator+=(const ScanStats& o) {
    examined += o.examined;
    matched += o.matched;
    return *this;
  }
};

/// An event as submitted to append_batch. The store assigns the id and the
/// stored per-agent sequence number; `seq` orders events of one agent inside
/// the batch.
struct EventDraft {
  AgentId agent_id = 0;
  EntityId subject_id = 0;
  Operation op = Operation::Read;
  EntityId object_id = 0;
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;
  std::uint64_t seq = 0;
  std::optional<std::uint64_t> amount;
};

struct StoreStats {
  std::uint64_t events = 0;
  std::uint64_t entities = 0;
  std::uint64_t partitions = 0;
  std::array<std::uint64_t, kEntityKindCount> entities_by_kind{};
  std::array<std::uint64_t, kEntityKindCount> events_by_type{};

  friend bool operator==(const StoreStats&, const StoreStats&) = default;
};

/// Selectivity assumed for atoms the estimator cannot answer from an index.
inline constexpr double kDefaultSelectivity = 0.1;

/// Above this many candidate entity ids a predicate is applied as a filter
/// instead of being turned into posting-list lookups.
inline constexpr std::size_t kMaxResolvedIds = 10'000;

/// Embedded event store: deduplicated entity catalog, day x agent partitions
/// with inverted indexes, batch-atomic appends. Optionally backed by a
/// directory (append log per partition plus a MANIFEST written last).
///
/// Readers may run concurrently; append_batch and upsert_entity take an
/// exclusive lock.
class EventStore {
 public:
  EventStore();
  ~EventStore();
  EventStore(EventStore&&) noexcept;
  EventStore& operator=(EventStore&&) noexcept;
  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// Opens (or creates) a directory-backed store. With `read_only` nothing is
  /// ever written back.
  static EventStore open(const std::filesystem::path& dir, bool read_only = false);

  const std::optional<std::filesystem::path>& directory() const;

  EntityId upsert_entity(AgentId agent, EntityKind kind, AttrMap attrs);

  /// Validates the whole batch first; commits all events or none.
  std::size_t append_batch(std::span<const EventDraft> drafts);

  std::vector<Event> scan(const ScanPredicate& pred, ScanStats* stats = nullptr) const;
  std::vector<Event> scan_partition(const PartitionKey& key, const ScanPredicate& pred,
                                    ScanStats* stats = nullptr) const;

  double estimate_count(const ScanPredicate& pred) const;

  StoreStats stats_snapshot() const;

  std::optional<Entity> entity(EntityId id) const;
  /// Reference stays valid until the next writer call.
  const Entity& entity_ref(EntityId id) const;
  std::optional<EntityId> find_entity(AgentId agent, EntityKind kind, const AttrMap& identity) const;

  std::vector<PartitionKey> partitions() const;
  std::vector<PartitionKey> candidate_partitions(const TimeRange& time,
                                                 const std::optional<std::vector<AgentId>>& agents) const;
  std::size_t partition_size(const PartitionKey& key) const;

  /// Every event in (start_ts, seq) order.
  std::vector<Event> all_events() const;
  std::vector<Entity> all_entities() const;
  std::optional<Event> event(EventId id) const;

  /// Writes pending catalog lines and the manifest. No-op for in-memory stores.
  void flush();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace aiql
