// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/event_store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "aiql/codec.hpp"

namespace aiql {

namespace fs = std::filesystem;

namespace {

using Positions = std::vector<std::uint32_t>;

struct Partition {
  PartitionKey key;
  /// Indices into State::events, sorted by event_order.
  std::vector<std::uint32_t> order;
  // Posting lists hold positions into `order`, ascending.
  std::array<Positions, kOperationCount> by_op;
  std::array<Positions, kEntityKindCount> by_kind;
  std::unordered_map<EntityId, Positions> by_subject;
  std::unordered_map<EntityId, Positions> by_object;
  // Append log bookkeeping for directory-backed stores.
  std::uint64_t file_bytes = 0;
  std::uint64_t file_lines = 0;
};

std::string partition_file_name(const PartitionKey& k) {
  return "part-" + std::to_string(k.agent_id) + "-" + std::to_string(k.day) + ".jsonl";
}

std::string identity_key(AgentId agent, EntityKind kind, const AttrMap& attrs) {
  std::string key = std::to_string(agent);
  key += '\x1f';
  key += to_string(kind);
  for (auto name : identity_attributes(kind)) {
    auto it = attrs.find(name);
    key += '\x1f';
    if (it == attrs.end()) continue;
    key += it->second.index() == 0 ? 'i' : 's';
    key += value_to_string(it->second);
  }
  return key;
}

void sorted_union(std::vector<EntityId>& acc, const std::vector<EntityId>& more) {
  std::vector<EntityId> out;
  out.reserve(acc.size() + more.size());
  std::set_union(acc.begin(), acc.end(), more.begin(), more.end(), std::back_inserter(out));
  acc.swap(out);
}

void sorted_intersect(std::vector<EntityId>& acc, const std::vector<EntityId>& more) {
  std::vector<EntityId> out;
  std::set_intersection(acc.begin(), acc.end(), more.begin(), more.end(), std::back_inserter(out));
  acc.swap(out);
}

// Alternate spelling under which compare_values treats a literal as equal.
std::optional<Value> alternate_key(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return Value{std::to_string(*i)};
  const auto& s = std::get<std::string>(v);
  std::int64_t n = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec == std::errc{} && p == s.data() + s.size() && std::to_string(n) == s) return Value{n};
  return std::nullopt;
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw StoreError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void append_to_file(const fs::path& path, std::uint64_t expected_bytes, const std::string& content) {
  // Drop any torn tail left by an interrupted earlier write.
  if (fs::exists(path) && fs::file_size(path) != expected_bytes) fs::resize_file(path, expected_bytes);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot append to " + path.string());
  out << content;
  out.flush();
  if (!out) throw StoreError("append failed for " + path.string());
}

}  // namespace

struct EventStore::State {
  mutable std::shared_mutex mutex;

  std::vector<Event> events;      // id = index + 1
  std::vector<Entity> entities;   // id = index + 1
  std::unordered_map<std::string, EntityId> identity;
  std::map<std::string, std::map<Value, std::vector<EntityId>>, std::less<>> value_index;
  std::unordered_map<AgentId, std::vector<EntityId>> entities_by_agent;
  std::map<PartitionKey, Partition> partitions;
  std::unordered_map<AgentId, std::uint64_t> last_seq;
  std::array<std::uint64_t, kEntityKindCount> events_by_type{};

  std::optional<fs::path> dir;
  bool read_only = false;
  std::vector<EntityId> dirty_entities;
  std::uint64_t catalog_bytes = 0;
  std::uint64_t catalog_lines = 0;

  const Entity& entity(EntityId id) const { return entities[id - 1]; }
  bool has_entity(EntityId id) const { return id >= 1 && id <= entities.size(); }
  const Event& event_at(std::uint32_t index) const { return events[index]; }

  void index_value(EntityId id, const std::string& attr, const Value& v) {
    auto& ids = value_index[attr][v];
    if (ids.empty() || ids.back() < id) {
      ids.push_back(id);
    } else if (!std::binary_search(ids.begin(), ids.end(), id)) {
      ids.insert(std::lower_bound(ids.begin(), ids.end(), id), id);
    }
  }

  void unindex_value(EntityId id, const std::string& attr, const Value& v) {
    auto a = value_index.find(attr);
    if (a == value_index.end()) return;
    auto b = a->second.find(v);
    if (b == a->second.end()) return;
    auto& ids = b->second;
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it != ids.end() && *it == id) ids.erase(it);
    if (ids.empty()) a->second.erase(b);
  }

  EntityId insert_entity(Entity e) {
    e.id = entities.size() + 1;
    identity.emplace(identity_key(e.agent_id, e.kind, e.attrs), e.id);
    for (const auto& [k, v] : e.attrs) index_value(e.id, k, v);
    entities_by_agent[e.agent_id].push_back(e.id);
    entities.push_back(std::move(e));
    return entities.back().id;
  }

  void merge_entity(EntityId id, AttrMap attrs) {
    Entity& e = entities[id - 1];
    for (auto& [k, v] : attrs) {
      auto it = e.attrs.find(k);
      if (it != e.attrs.end()) {
        if (it->second == v) continue;
        unindex_value(id, k, it->second);
        it->second = v;
      } else {
        e.attrs.emplace(k, v);
      }
      index_value(id, k, v);
    }
  }

  static void index_position(Partition& p, const Event& e, EntityKind object_kind, std::uint32_t pos) {
    p.by_op[static_cast<std::size_t>(e.op)].push_back(pos);
    p.by_kind[static_cast<std::size_t>(object_kind)].push_back(pos);
    p.by_subject[e.subject_id].push_back(pos);
    p.by_object[e.object_id].push_back(pos);
  }

  void rebuild_indexes(Partition& p) const {
    for (auto& v : p.by_op) v.clear();
    for (auto& v : p.by_kind) v.clear();
    p.by_subject.clear();
    p.by_object.clear();
    for (std::uint32_t pos = 0; pos < p.order.size(); ++pos) {
      const Event& e = events[p.order[pos]];
      index_position(p, e, entity(e.object_id).kind, pos);
    }
  }

  /// Adds already-stored events (given by index) to their partitions.
  void route(const std::vector<std::uint32_t>& indices) {
    std::map<PartitionKey, std::vector<std::uint32_t>> grouped;
    for (auto idx : indices) {
      const Event& e = events[idx];
      grouped[partition_key(e.agent_id, e.start_ts)].push_back(idx);
    }
    auto less = [this](std::uint32_t a, std::uint32_t b) { return event_less(events[a], events[b]); };
    for (auto& [key, fresh] : grouped) {
      Partition& p = partitions[key];
      p.key = key;
      std::sort(fresh.begin(), fresh.end(), less);
      bool tail_append = p.order.empty() || less(p.order.back(), fresh.front());
      if (tail_append) {
        for (auto idx : fresh) {
          auto pos = static_cast<std::uint32_t>(p.order.size());
          p.order.push_back(idx);
          const Event& e = events[idx];
          index_position(p, e, entity(e.object_id).kind, pos);
        }
      } else {
        auto mid = p.order.size();
        p.order.insert(p.order.end(), fresh.begin(), fresh.end());
        std::inplace_merge(p.order.begin(), p.order.begin() + static_cast<std::ptrdiff_t>(mid), p.order.end(),
                           less);
        rebuild_indexes(p);
      }
    }
  }

  // --- predicate resolution -------------------------------------------------

  std::optional<std::vector<EntityId>> resolve_atom(const Atom& atom) const {
    std::vector<EntityId> ids;
    if (atom.attribute == "id") {
      if (atom.cmp != Comparator::Eq) return std::nullopt;
      const auto* n = std::get_if<std::int64_t>(&atom.literal);
      if (!n) return std::nullopt;
      if (*n >= 1 && static_cast<std::uint64_t>(*n) <= entities.size()) ids.push_back(static_cast<EntityId>(*n));
      return ids;
    }
    if (atom.attribute == "agentid") {
      if (atom.cmp != Comparator::Eq) return std::nullopt;
      const auto* n = std::get_if<std::int64_t>(&atom.literal);
      if (!n) return std::nullopt;
      auto it = entities_by_agent.find(static_cast<AgentId>(*n));
      if (it == entities_by_agent.end()) return ids;
      if (it->second.size() > kMaxResolvedIds) return std::nullopt;
      return it->second;
    }
    auto attr = value_index.find(atom.attribute);
    if (attr == value_index.end()) return ids;
    if (atom.cmp == Comparator::Eq) {
      if (auto it = attr->second.find(atom.literal); it != attr->second.end()) ids = it->second;
      if (auto alt = alternate_key(atom.literal)) {
        if (auto it = attr->second.find(*alt); it != attr->second.end()) sorted_union(ids, it->second);
      }
    } else {
      for (const auto& [value, owners] : attr->second) {
        if (!compare_values(value, atom.cmp, atom.literal)) continue;
        sorted_union(ids, owners);
        if (ids.size() > kMaxResolvedIds) return std::nullopt;
      }
    }
    if (ids.size() > kMaxResolvedIds) return std::nullopt;
    return ids;
  }

  /// Superset of the entity ids satisfying `pred`, or nullopt when the
  /// predicate can only be applied as a filter.
  std::optional<std::vector<EntityId>> resolve(const Predicate& pred) const {
    switch (pred.kind) {
      case Predicate::Kind::True: return std::nullopt;
      case Predicate::Kind::Atom: return resolve_atom(pred.atom);
      case Predicate::Kind::And: {
        std::optional<std::vector<EntityId>> acc;
        for (const auto& c : pred.children) {
          auto r = resolve(c);
          if (!r) continue;
          if (!acc) {
            acc = std::move(r);
          } else {
            sorted_intersect(*acc, *r);
          }
        }
        return acc;
      }
      case Predicate::Kind::Or: {
        std::vector<EntityId> acc;
        for (const auto& c : pred.children) {
          auto r = resolve(c);
          if (!r) return std::nullopt;
          sorted_union(acc, *r);
          if (acc.size() > kMaxResolvedIds) return std::nullopt;
        }
        return acc;
      }
    }
    return std::nullopt;
  }

  struct Resolved {
    std::optional<std::vector<EntityId>> subject_ids;
    std::optional<std::vector<EntityId>> object_ids;
  };

  Resolved resolve_scan(const ScanPredicate& pred) const {
    Resolved r;
    r.subject_ids = resolve(pred.subject);
    if (pred.subject_ids) {
      if (r.subject_ids) {
        sorted_intersect(*r.subject_ids, *pred.subject_ids);
      } else {
        r.subject_ids = pred.subject_ids;
      }
    }
    r.object_ids = resolve(pred.object);
    if (pred.object_ids) {
      if (r.object_ids) {
        sorted_intersect(*r.object_ids, *pred.object_ids);
      } else {
        r.object_ids = pred.object_ids;
      }
    }
    return r;
  }

  // --- scanning -------------------------------------------------------------

  std::pair<std::uint32_t, std::uint32_t> time_bounds(const Partition& p, const TimeRange& time) const {
    auto first = std::lower_bound(p.order.begin(), p.order.end(), time.lo,
                                  [this](std::uint32_t idx, Timestamp t) { return events[idx].start_ts < t; });
    auto last = std::lower_bound(first, p.order.end(), time.hi,
                                 [this](std::uint32_t idx, Timestamp t) { return events[idx].start_ts < t; });
    return {static_cast<std::uint32_t>(first - p.order.begin()), static_cast<std::uint32_t>(last - p.order.begin())};
  }

  static std::size_t postings_size(const std::unordered_map<EntityId, Positions>& index,
                                   const std::vector<EntityId>& ids) {
    std::size_t n = 0;
    for (auto id : ids)
      if (auto it = index.find(id); it != index.end()) n += it->second.size();
    return n;
  }

  /// Appends the postings of `ids`, cut to each id's own time range when one is given.
  void gather(const Partition& p, const std::unordered_map<EntityId, Positions>& index,
              const std::vector<EntityId>& ids, const std::optional<std::map<EntityId, TimeRange>>& times,
              Positions& out) const {
    auto before = [&](std::uint32_t pos, Timestamp t) { return events[p.order[pos]].start_ts < t; };
    for (auto id : ids) {
      auto it = index.find(id);
      if (it == index.end()) continue;
      auto first = it->second.begin(), last = it->second.end();
      if (times) {
        if (auto range = times->find(id); range != times->end()) {
          first = std::lower_bound(first, last, range->second.lo, before);
          last = std::lower_bound(first, last, range->second.hi, before);
        }
      }
      out.insert(out.end(), first, last);
    }
  }

  void scan_partition(const Partition& p, const ScanPredicate& pred, const Resolved& resolved, ScanStats& stats,
                      std::vector<Event>& out) const {
    if (pred.time.empty()) return;
    if (pred.agents && std::find(pred.agents->begin(), pred.agents->end(), p.key.agent_id) == pred.agents->end())
      return;
    if (pred.ops && pred.ops->empty()) return;
    if (resolved.subject_ids && resolved.subject_ids->empty()) return;
    if (resolved.object_ids && resolved.object_ids->empty()) return;

    auto [lo, hi] = time_bounds(p, pred.time);
    if (lo >= hi) return;

    // Pick the cheapest candidate source; every candidate is re-checked below.
    enum class Source { Range, Subject, Object, Ops, Kind } source = Source::Range;
    std::size_t best = hi - lo;
    auto consider = [&](Source s, std::size_t n) {
      if (n < best) {
        best = n;
        source = s;
      }
    };
    if (resolved.subject_ids) consider(Source::Subject, postings_size(p.by_subject, *resolved.subject_ids));
    if (resolved.object_ids) consider(Source::Object, postings_size(p.by_object, *resolved.object_ids));
    if (pred.ops) {
      std::size_t n = 0;
      for (auto op : pred.ops->to_vector()) n += p.by_op[static_cast<std::size_t>(op)].size();
      consider(Source::Ops, n);
    }
    if (pred.object_kind) consider(Source::Kind, p.by_kind[static_cast<std::size_t>(*pred.object_kind)].size());

    auto check = [&](std::uint32_t pos) {
      const Event& e = events[p.order[pos]];
      ++stats.examined;
      if (matches(pred, e, entity(e.subject_id), entity(e.object_id))) {
        ++stats.matched;
        out.push_back(e);
      }
    };

    if (source == Source::Range) {
      for (auto pos = lo; pos < hi; ++pos) check(pos);
      return;
    }
    Positions candidates;
    switch (source) {
      case Source::Subject: gather(p, p.by_subject, *resolved.subject_ids, pred.subject_times, candidates); break;
      case Source::Object: gather(p, p.by_object, *resolved.object_ids, pred.object_times, candidates); break;
      case Source::Ops:
        for (auto op : pred.ops->to_vector()) {
          const auto& list = p.by_op[static_cast<std::size_t>(op)];
          candidates.insert(candidates.end(), list.begin(), list.end());
        }
        break;
      case Source::Kind: candidates = p.by_kind[static_cast<std::size_t>(*pred.object_kind)]; break;
      case Source::Range: break;
    }
    std::sort(candidates.begin(), candidates.end());
    auto first = std::lower_bound(candidates.begin(), candidates.end(), lo);
    auto last = std::lower_bound(first, candidates.end(), hi);
    for (auto it = first; it != last; ++it) check(*it);
  }

  std::vector<const Partition*> candidates(const TimeRange& time,
                                           const std::optional<std::vector<AgentId>>& agents) const {
    std::vector<const Partition*> out;
    if (time.empty()) return out;
    std::int64_t first_day = time.lo == kMinTimestamp ? std::numeric_limits<std::int64_t>::min()
                                                      : floor_div(time.lo, kMillisPerDay);
    std::int64_t last_day = time.hi == kMaxTimestamp ? std::numeric_limits<std::int64_t>::max()
                                                     : floor_div(time.hi - 1, kMillisPerDay);
    for (const auto& [key, p] : partitions) {
      if (key.day < first_day || key.day > last_day) continue;
      if (agents && std::find(agents->begin(), agents->end(), key.agent_id) == agents->end()) continue;
      out.push_back(&p);
    }
    return out;
  }

  // --- estimation -----------------------------------------------------------

  double id_selectivity(const std::unordered_map<EntityId, Positions>& index, const std::vector<EntityId>& ids,
                        std::size_t size) const {
    return size == 0 ? 0.0 : static_cast<double>(postings_size(index, ids)) / static_cast<double>(size);
  }

  double selectivity(const Predicate& pred, const Partition& p,
                     const std::unordered_map<EntityId, Positions>& index) const {
    const std::size_t size = p.order.size();
    switch (pred.kind) {
      case Predicate::Kind::True: return 1.0;
      case Predicate::Kind::Atom: {
        const Atom& a = pred.atom;
        if (a.cmp != Comparator::Eq) return kDefaultSelectivity;
        if (a.attribute == "agentid") {
          // Subjects always live on the partition's agent; objects almost always.
          const auto* n = std::get_if<std::int64_t>(&a.literal);
          return n && static_cast<AgentId>(*n) == p.key.agent_id ? 1.0 : 0.0;
        }
        auto ids = resolve_atom(a);
        if (!ids) return kDefaultSelectivity;
        return id_selectivity(index, *ids, size);
      }
      case Predicate::Kind::And: {
        double s = 1.0;
        for (const auto& c : pred.children) s *= selectivity(c, p, index);
        return s;
      }
      case Predicate::Kind::Or: {
        double s = 0.0;
        for (const auto& c : pred.children) s += selectivity(c, p, index);
        return std::min(1.0, s);
      }
    }
    return 1.0;
  }

  // --- persistence ----------------------------------------------------------

  struct FileSize {
    std::uint64_t bytes = 0;
    std::uint64_t lines = 0;
  };

  /// Appends the given events and pending catalog lines, then rewrites the
  /// manifest. Size bookkeeping only changes once everything is on disk.
  void persist(const std::vector<std::uint32_t>& indices) {
    if (!dir || read_only) return;
    std::map<PartitionKey, FileSize> sizes;
    for (const auto& [key, p] : partitions) sizes[key] = {p.file_bytes, p.file_lines};

    std::map<PartitionKey, std::string> chunks;
    std::map<PartitionKey, std::uint64_t> line_counts;
    for (auto idx : indices) {
      const Event& e = events[idx];
      auto key = partition_key(e.agent_id, e.start_ts);
      chunks[key] += to_json(e).dump();
      chunks[key] += '\n';
      ++line_counts[key];
    }
    for (const auto& [key, chunk] : chunks) {
      FileSize& fsz = sizes[key];
      append_to_file(*dir / partition_file_name(key), fsz.bytes, chunk);
      fsz.bytes += chunk.size();
      fsz.lines += line_counts[key];
    }

    FileSize catalog{catalog_bytes, catalog_lines};
    if (!dirty_entities.empty()) {
      std::string chunk;
      for (auto id : dirty_entities) {
        chunk += to_json(entity(id)).dump();
        chunk += '\n';
      }
      append_to_file(*dir / "catalog.jsonl", catalog.bytes, chunk);
      catalog.bytes += chunk.size();
      catalog.lines += dirty_entities.size();
    }

    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["catalog"] = {{"file", "catalog.jsonl"}, {"lines", catalog.lines}, {"bytes", catalog.bytes}};
    manifest["partitions"] = nlohmann::json::array();
    for (const auto& [key, fsz] : sizes) {
      if (fsz.lines == 0) continue;
      manifest["partitions"].push_back({{"agent_id", key.agent_id},
                                        {"day", key.day},
                                        {"file", partition_file_name(key)},
                                        {"count", fsz.lines},
                                        {"bytes", fsz.bytes}});
    }
    write_file_atomically(*dir / "MANIFEST", manifest.dump(2) + "\n");

    for (const auto& [key, fsz] : sizes) {
      if (fsz.lines == 0) continue;
      Partition& p = partitions[key];
      p.key = key;
      p.file_bytes = fsz.bytes;
      p.file_lines = fsz.lines;
    }
    catalog_bytes = catalog.bytes;
    catalog_lines = catalog.lines;
    dirty_entities.clear();
  }

  void mark_dirty(EntityId id) {
    if (dir && !read_only) dirty_entities.push_back(id);
  }

  void load() {
    const fs::path manifest_path = *dir / "MANIFEST";
    if (!fs::exists(manifest_path)) return;
    std::ifstream in(manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(in);

    const auto& cat = manifest.at("catalog");
    catalog_lines = cat.at("lines").get<std::uint64_t>();
    catalog_bytes = cat.at("bytes").get<std::uint64_t>();
    {
      std::ifstream c(*dir / cat.at("file").get<std::string>());
      std::string line;
      for (std::uint64_t i = 0; i < catalog_lines && std::getline(c, line); ++i) {
        Entity e = entity_from_json(nlohmann::json::parse(line));
        if (e.id == entities.size() + 1) {
          insert_entity(std::move(e));
        } else if (has_entity(e.id)) {
          merge_entity(e.id, std::move(e.attrs));
        } else {
          throw StoreError("catalog ids out of order at line " + std::to_string(i + 1));
        }
      }
    }

    std::vector<Event> loaded;
    for (const auto& part : manifest.at("partitions")) {
      PartitionKey key{part.at("agent_id").get<AgentId>(), part.at("day").get<std::int64_t>()};
      auto count = part.at("count").get<std::uint64_t>();
      std::ifstream pf(*dir / part.at("file").get<std::string>());
      std::string line;
      for (std::uint64_t i = 0; i < count && std::getline(pf, line); ++i)
        loaded.push_back(event_from_json(nlohmann::json::parse(line)));
      Partition& p = partitions[key];
      p.key = key;
      p.file_lines = count;
      p.file_bytes = part.at("bytes").get<std::uint64_t>();
    }
    std::sort(loaded.begin(), loaded.end(), [](const Event& a, const Event& b) { return a.id < b.id; });
    events.reserve(loaded.size());
    std::vector<std::uint32_t> indices;
    for (auto& e : loaded) {
      if (e.id != events.size() + 1) throw StoreError("event ids are not contiguous in " + dir->string());
      auto& seq = last_seq[e.agent_id];
      seq = std::max(seq, e.seq);
      events_by_type[static_cast<std::size_t>(event_type(entity(e.object_id).kind))]++;
      indices.push_back(static_cast<std::uint32_t>(events.size()));
      events.push_back(e);
    }
    route(indices);
  }
};

bool matches(const ScanPredicate& pred, const Event& e, const Entity& subject, const Entity& object) {
  if (!pred.time.contains(e.start_ts)) return false;
  if (pred.agents && std::find(pred.agents->begin(), pred.agents->end(), e.agent_id) == pred.agents->end())
    return false;
  if (pred.ops && !pred.ops->contains(e.op)) return false;
  if (pred.object_kind && object.kind != *pred.object_kind) return false;
  if (pred.subject_ids && !std::binary_search(pred.subject_ids->begin(), pred.subject_ids->end(), e.subject_id))
    return false;
  if (pred.object_ids && !std::binary_search(pred.object_ids->begin(), pred.object_ids->end(), e.object_id))
    return false;
  auto in_range = [&e](const std::optional<std::map<EntityId, TimeRange>>& times, EntityId id) {
    if (!times) return true;
    auto it = times->find(id);
    return it == times->end() || it->second.contains(e.start_ts);
  };
  if (!in_range(pred.subject_times, e.subject_id) || !in_range(pred.object_times, e.object_id)) return false;
  return evaluate(pred.subject, subject) && evaluate(pred.object, object);
}

EventStore::EventStore() : state_(std::make_unique<State>()) {}
EventStore::~EventStore() {
  if (state_) {
    try {
      flush();
    } catch (...) {
    }
  }
}
EventStore::EventStore(EventStore&&) noexcept = default;
EventStore& EventStore::operator=(EventStore&&) noexcept = default;

EventStore EventStore::open(const fs::path& dir, bool read_only) {
  EventStore store;
  if (!fs::exists(dir)) {
    if (read_only) throw StoreError("store directory does not exist: " + dir.string());
    fs::create_directories(dir);
  }
  store.state_->dir = dir;
  store.state_->read_only = read_only;
  store.state_->load();
  return store;
}

const std::optional<fs::path>& EventStore::directory() const { return state_->dir; }

EntityId EventStore::upsert_entity(AgentId agent, EntityKind kind, AttrMap attrs) {
  for (auto name : identity_attributes(kind)) {
    auto it = attrs.find(name);
    if (it == attrs.end())
      throw MissingIdentityAttribute(std::string(to_string(kind)) + " entity lacks identity attribute " +
                                     std::string(name));
    if (const auto* s = std::get_if<std::string>(&it->second); s && s->empty() && name != "protocol")
      throw MissingIdentityAttribute("identity attribute " + std::string(name) + " is empty");
  }
  std::unique_lock lock(state_->mutex);
  auto key = identity_key(agent, kind, attrs);
  if (auto it = state_->identity.find(key); it != state_->identity.end()) {
    const Entity& before = state_->entity(it->second);
    bool changed = false;
    for (const auto& [k, v] : attrs) {
      auto cur = before.attrs.find(k);
      if (cur == before.attrs.end() || cur->second != v) changed = true;
    }
    if (changed) {
      state_->merge_entity(it->second, std::move(attrs));
      state_->mark_dirty(it->second);
    }
    return it->second;
  }
  Entity e;
  e.agent_id = agent;
  e.kind = kind;
  e.attrs = std::move(attrs);
  auto id = state_->insert_entity(std::move(e));
  state_->mark_dirty(id);
  return id;
}

std::size_t EventStore::append_batch(std::span<const EventDraft> drafts) {
  std::unique_lock lock(state_->mutex);
  State& s = *state_;

  std::unordered_map<AgentId, std::uint64_t> batch_seq;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const auto& d = drafts[i];
    if (!s.has_entity(d.subject_id))
      throw UnknownEntityId("event " + std::to_string(i) + ": unknown subject id " + std::to_string(d.subject_id));
    if (!s.has_entity(d.object_id))
      throw UnknownEntityId("event " + std::to_string(i) + ": unknown object id " + std::to_string(d.object_id));
    Event probe{0, d.agent_id, d.subject_id, d.op, d.object_id, d.start_ts, d.end_ts, d.seq, d.amount};
    auto violations = validate_event(probe, s.entity(d.subject_id), s.entity(d.object_id));
    if (!violations.empty()) throw InvalidEvent("event " + std::to_string(i) + ": " + violations.front());
    auto [it, fresh] = batch_seq.try_emplace(d.agent_id, d.seq);
    if (!fresh) {
      if (d.seq <= it->second)
        throw OutOfOrderSeq("event " + std::to_string(i) + ": seq " + std::to_string(d.seq) +
                            " does not increase for agent " + std::to_string(d.agent_id));
      it->second = d.seq;
    }
  }

  std::vector<std::uint32_t> indices;
  indices.reserve(drafts.size());
  const auto first_new = s.events.size();
  auto seq_snapshot = s.last_seq;
  for (const auto& d : drafts) {
    Event e{s.events.size() + 1, d.agent_id, d.subject_id, d.op, d.object_id, d.start_ts, d.end_ts,
            ++s.last_seq[d.agent_id], d.amount};
    indices.push_back(static_cast<std::uint32_t>(s.events.size()));
    s.events.push_back(e);
  }
  try {
    s.persist(indices);
  } catch (...) {
    s.events.resize(first_new);
    s.last_seq = std::move(seq_snapshot);
    throw;
  }
  for (auto idx : indices) {
    const Event& e = s.events[idx];
    s.events_by_type[static_cast<std::size_t>(event_type(s.entity(e.object_id).kind))]++;
  }
  s.route(indices);
  return drafts.size();
}

std::vector<Event> EventStore::scan(const ScanPredicate& pred, ScanStats* stats) const {
  std::shared_lock lock(state_->mutex);
  ScanStats local;
  std::vector<Event> out;
  auto resolved = state_->resolve_scan(pred);
  for (const Partition* p : state_->candidates(pred.time, pred.agents))
    state_->scan_partition(*p, pred, resolved, local, out);
  std::sort(out.begin(), out.end(), event_less);
  if (stats) *stats += local;
  return out;
}

std::vector<Event> EventStore::scan_partition(const PartitionKey& key, const ScanPredicate& pred,
                                              ScanStats* stats) const {
  std::shared_lock lock(state_->mutex);
  std::vector<Event> out;
  auto it = state_->partitions.find(key);
  if (it == state_->partitions.end()) return out;
  ScanStats local;
  state_->scan_partition(it->second, pred, state_->resolve_scan(pred), local, out);
  if (stats) *stats += local;
  return out;
}

double EventStore::estimate_count(const ScanPredicate& pred) const {
  std::shared_lock lock(state_->mutex);
  const State& s = *state_;
  double total = 0.0;
  for (const Partition* p : s.candidates(pred.time, pred.agents)) {
    const std::size_t size = p->order.size();
    if (size == 0) continue;
    auto [lo, hi] = s.time_bounds(*p, pred.time);
    // Multiply before dividing so a single exact factor stays exact.
    double est = static_cast<double>(hi - lo);
    if (pred.ops) {
      std::size_t n = 0;
      for (auto op : pred.ops->to_vector()) n += p->by_op[static_cast<std::size_t>(op)].size();
      est = est * static_cast<double>(n) / static_cast<double>(size);
    }
    if (pred.object_kind)
      est = est * static_cast<double>(p->by_kind[static_cast<std::size_t>(*pred.object_kind)].size()) /
            static_cast<double>(size);
    if (pred.subject_ids)
      est = est * static_cast<double>(State::postings_size(p->by_subject, *pred.subject_ids)) /
            static_cast<double>(size);
    if (pred.object_ids)
      est = est * static_cast<double>(State::postings_size(p->by_object, *pred.object_ids)) /
            static_cast<double>(size);
    est *= s.selectivity(pred.subject, *p, p->by_subject);
    est *= s.selectivity(pred.object, *p, p->by_object);
    total += std::clamp(est, 0.0, static_cast<double>(size));
  }
  return total;
}

StoreStats EventStore::stats_snapshot() const {
  std::shared_lock lock(state_->mutex);
  StoreStats st;
  st.events = state_->events.size();
  st.entities = state_->entities.size();
  st.partitions = state_->partitions.size();
  for (const auto& e : state_->entities) st.entities_by_kind[static_cast<std::size_t>(e.kind)]++;
  st.events_by_type = state_->events_by_type;
  return st;
}

std::optional<Entity> EventStore::entity(EntityId id) const {
  std::shared_lock lock(state_->mutex);
  if (!state_->has_entity(id)) return std::nullopt;
  return state_->entity(id);
}

const Entity& EventStore::entity_ref(EntityId id) const {
  std::shared_lock lock(state_->mutex);
  if (!state_->has_entity(id)) throw UnknownEntityId("unknown entity id " + std::to_string(id));
  return state_->entity(id);
}

std::optional<EntityId> EventStore::find_entity(AgentId agent, EntityKind kind, const AttrMap& identity) const {
  std::shared_lock lock(state_->mutex);
  auto it = state_->identity.find(identity_key(agent, kind, identity));
  if (it == state_->identity.end()) return std::nullopt;
  return it->second;
}

std::vector<PartitionKey> EventStore::partitions() const {
  std::shared_lock lock(state_->mutex);
  std::vector<PartitionKey> out;
  for (const auto& [key, p] : state_->partitions) out.push_back(key);
  return out;
}

std::vector<PartitionKey> EventStore::candidate_partitions(const TimeRange& time,
                                                           const std::optional<std::vector<AgentId>>& agents) const {
  std::shared_lock lock(state_->mutex);
  std::vector<PartitionKey> out;
  for (const Partition* p : state_->candidates(time, agents)) out.push_back(p->key);
  return out;
}

std::size_t EventStore::partition_size(const PartitionKey& key) const {
  std::shared_lock lock(state_->mutex);
  auto it = state_->partitions.find(key);
  return it == state_->partitions.end() ? 0 : it->second.order.size();
}

std::vector<Event> EventStore::all_events() const {
  std::shared_lock lock(state_->mutex);
  std::vector<Event> out = state_->events;
  std::sort(out.begin(), out.end(), event_less);
  return out;
}

std::vector<Entity> EventStore::all_entities() const {
  std::shared_lock lock(state_->mutex);
  return state_->entities;
}

std::optional<Event> EventStore::event(EventId id) const {
  std::shared_lock lock(state_->mutex);
  if (id < 1 || id > state_->events.size()) return std::nullopt;
  return state_->events[id - 1];
}

void EventStore::flush() {
  if (!state_->dir || state_->read_only) return;
  std::unique_lock lock(state_->mutex);
  state_->persist({});
}

}  // namespace aiql
