// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

// Straight-line reference semantics used by property and acceptance tests.
// Deliberately shares no evaluation code with the library: like-patterns go
// through std::regex, comparisons are re-implemented, and scans are plain
// loops over every stored event.

#pragma once

#include <algorithm>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include "aiql/event_store.hpp"

namespace aiql::testing {

inline bool oracle_like(const std::string& text, const std::string& pattern) {
  std::string re;
  for (char c : pattern) {
    if (c == '%') {
      re += ".*";
    } else if (std::string("\\^$.|?*+()[]{}").find(c) != std::string::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  return std::regex_match(text, std::regex(re));
}

inline std::string oracle_text(const Value& v) {
  return v.index() == 0 ? std::to_string(std::get<0>(v)) : std::get<1>(v);
}

inline bool oracle_compare(const Value& actual, Comparator cmp, const Value& lit) {
  if (cmp == Comparator::Like) return oracle_like(oracle_text(actual), oracle_text(lit));
  int c = 0;
  if (actual.index() == 0 && lit.index() == 0) {
    auto a = std::get<0>(actual), b = std::get<0>(lit);
    c = a < b ? -1 : (a > b ? 1 : 0);
  } else {
    c = oracle_text(actual).compare(oracle_text(lit));
    c = c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  switch (cmp) {
    case Comparator::Eq: return c == 0;
    case Comparator::Ne: return c != 0;
    case Comparator::Lt: return c < 0;
    case Comparator::Le: return c <= 0;
    case Comparator::Gt: return c > 0;
    case Comparator::Ge: return c >= 0;
    default: return false;
  }
}

inline std::optional<Value> oracle_attribute(const Entity& e, const std::string& name) {
  if (name == "id") return Value{static_cast<std::int64_t>(e.id)};
  if (name == "agentid") return Value{static_cast<std::int64_t>(e.agent_id)};
  for (const auto& [k, v] : e.attrs)
    if (k == name) return v;
  return std::nullopt;
}

inline bool oracle_eval(const Predicate& p, const Entity& e) {
  switch (p.kind) {
    case Predicate::Kind::True: return true;
    case Predicate::Kind::Atom: {
      auto v = oracle_attribute(e, p.atom.attribute);
      return v && oracle_compare(*v, p.atom.cmp, p.atom.literal);
    }
    case Predicate::Kind::And:
      return std::all_of(p.children.begin(), p.children.end(), [&](const Predicate& c) { return oracle_eval(c, e); });
    case Predicate::Kind::Or:
      return std::any_of(p.children.begin(), p.children.end(), [&](const Predicate& c) { return oracle_eval(c, e); });
  }
  return false;
}

/// Snapshot of the store's contents for brute-force evaluation.
struct Universe {
  std::vector<Event> events;
  std::unordered_map<EntityId, Entity> entities;

  explicit Universe(const EventStore& store) : events(store.all_events()) {
    for (auto& e : store.all_entities()) entities.emplace(e.id, e);
  }
  const Entity& entity(EntityId id) const { return entities.at(id); }
};

inline bool oracle_matches(const ScanPredicate& pred, const Event& ev, const Universe& u) {
  if (ev.start_ts < pred.time.lo || ev.start_ts >= pred.time.hi) return false;
  if (pred.agents) {
    bool found = false;
    for (auto a : *pred.agents) found = found || a == ev.agent_id;
    if (!found) return false;
  }
  if (pred.ops && !pred.ops->contains(ev.op)) return false;
  const Entity& s = u.entity(ev.subject_id);
  const Entity& o = u.entity(ev.object_id);
  if (pred.object_kind && o.kind != *pred.object_kind) return false;
  if (pred.subject_ids &&
      std::find(pred.subject_ids->begin(), pred.subject_ids->end(), ev.subject_id) == pred.subject_ids->end())
    return false;
  if (pred.object_ids &&
      std::find(pred.object_ids->begin(), pred.object_ids->end(), ev.object_id) == pred.object_ids->end())
    return false;
  for (const auto* times : {&pred.subject_times, &pred.object_times}) {
    if (!*times) continue;
    const EntityId id = times == &pred.subject_times ? ev.subject_id : ev.object_id;
    for (const auto& [tid, range] : **times)
      if (tid == id && (ev.start_ts < range.lo || ev.start_ts >= range.hi)) return false;
  }
  return oracle_eval(pred.subject, s) && oracle_eval(pred.object, o);
}

inline std::vector<Event> oracle_scan(const ScanPredicate& pred, const Universe& u) {
  std::vector<Event> out;
  for (const auto& ev : u.events)
    if (oracle_matches(pred, ev, u)) out.push_back(ev);
  return out;
}

}  // namespace aiql::testing
