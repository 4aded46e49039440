// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <random>

#include "aiql/event_store.hpp"
#include "random_store.hpp"

namespace aiql::testing {

inline Atom random_entity_atom(std::mt19937_64& rng, EntityKind kind) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const Comparator cmps[] = {Comparator::Eq, Comparator::Eq, Comparator::Like, Comparator::Ne,
                             Comparator::Lt, Comparator::Ge};
  Comparator cmp = cmps[pick(6)];
  switch (kind) {
    case EntityKind::Process:
      if (pick(4) == 0) return {"pid", cmp == Comparator::Like ? Comparator::Eq : cmp,
                                static_cast<std::int64_t>(100 + pick(8))};
      if (pick(6) == 0) return {"user", Comparator::Eq, std::string(pick(2) ? "svc" : "root")};
      if (cmp == Comparator::Like) return {"exe_name", cmp, "%" + kExeNames[pick(kExeNames.size())].substr(0, 3) + "%"};
      return {"exe_name", cmp, kExeNames[pick(kExeNames.size())]};
    case EntityKind::File:
      if (cmp == Comparator::Like) return {"name", cmp, std::string(pick(2) ? "%dmp" : "%info%")};
      return {"name", cmp, kFileNames[pick(kFileNames.size())]};
    case EntityKind::NetChannel:
      if (pick(5) == 0) return {"agentid", Comparator::Eq, static_cast<std::int64_t>(1 + pick(2))};
      if (cmp == Comparator::Like) return {"dst_ip", cmp, std::string("10.%")};
      return {"dst_ip", cmp, kDstIps[pick(kDstIps.size())]};
  }
  return {};
}

inline Predicate random_entity_predicate(std::mt19937_64& rng, EntityKind kind, int depth = 0) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto roll = pick(depth == 0 ? 6 : 4);
  if (roll == 0) return Predicate::always();
  if (roll <= 2 || depth >= 2) return Predicate::of(random_entity_atom(rng, kind));
  std::vector<Predicate> parts;
  auto n = 2 + pick(2);
  for (std::size_t i = 0; i < n; ++i) parts.push_back(random_entity_predicate(rng, kind, depth + 1));
  return roll == 3 ? Predicate::all_of(std::move(parts)) : Predicate::any_of(std::move(parts));
}

inline ScanPredicate random_scan_predicate(std::mt19937_64& rng, const RandomStoreConfig& cfg) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  ScanPredicate p;
  if (pick(3) == 0) {
    Timestamp span = cfg.days * kMillisPerDay;
    Timestamp a = cfg.base_ts + static_cast<Timestamp>(pick(static_cast<std::size_t>(span)));
    Timestamp b = cfg.base_ts + static_cast<Timestamp>(pick(static_cast<std::size_t>(span)));
    p.time = {std::min(a, b), std::max(a, b) + 1};
  }
  if (pick(3) == 0) {
    std::vector<AgentId> agents;
    for (AgentId a = 1; a <= cfg.agents; ++a)
      if (pick(2)) agents.push_back(a);
    p.agents = agents;
  }
  if (pick(2) == 0) {
    OpSet ops;
    auto n = 1 + pick(3);
    for (std::size_t i = 0; i < n; ++i) ops.insert(static_cast<Operation>(pick(kOperationCount)));
    p.ops = ops;
  }
  auto kind = static_cast<EntityKind>(pick(3));
  if (pick(3) != 0) p.object_kind = kind;
  p.subject = random_entity_predicate(rng, EntityKind::Process);
  if (p.object_kind) p.object = random_entity_predicate(rng, kind);
  if (pick(6) == 0) {
    std::vector<EntityId> ids;
    for (EntityId id = 1; id <= 40; ++id)
      if (pick(3) == 0) ids.push_back(id);
    p.subject_ids = ids;
  }
  // Per-id windows over a random subset of ids, listed or not.
  for (auto* times : {&p.subject_times, &p.object_times}) {
    if (pick(4) != 0) continue;
    *times = std::map<EntityId, TimeRange>{};
    for (EntityId id = 1; id <= 40; ++id) {
      if (pick(2)) continue;
      Timestamp a = cfg.base_ts + static_cast<Timestamp>(pick(static_cast<std::size_t>(cfg.days * kMillisPerDay)));
      Timestamp b = cfg.base_ts + static_cast<Timestamp>(pick(static_cast<std::size_t>(cfg.days * kMillisPerDay)));
      (**times)[id] = {std::min(a, b), std::max(a, b) + 1};
    }
  }
  return p;
}

}  // namespace aiql::testing
