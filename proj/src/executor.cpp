// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/executor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "aiql/parser.hpp"

namespace aiql {

std::string cell_to_string(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", *d);
    return buf;
  }
  return std::get<std::string>(c);
}

std::uint64_t ExecStats::scanned() const {
  std::uint64_t total = 0;
  for (const auto& p : per_pattern) total += p.scanned;
  return total;
}

nlohmann::json to_json(const ExecStats& s) {
  auto per = nlohmann::json::array();
  for (const auto& p : s.per_pattern)
    per.push_back({{"alias", p.alias}, {"estimated", p.estimated}, {"scanned", p.scanned}, {"matched", p.matched}});
  return {{"planning_ms", s.planning_ms}, {"execution_ms", s.execution_ms}, {"per_pattern", per}};
}

nlohmann::json to_json(const ResultTable& t) {
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::json::array();
    for (const auto& c : row) std::visit([&](const auto& v) { r.push_back(v); }, c);
    rows.push_back(std::move(r));
  }
  return {{"columns", t.columns}, {"rows", rows}, {"stats", to_json(t.stats)}, {"truncated", t.truncated}};
}

std::string to_text(const ResultTable& t) {
  std::vector<std::size_t> width(t.columns.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
  for (const auto& row : t.rows) {
    auto& out = cells.emplace_back();
    for (std::size_t c = 0; c < row.size(); ++c) {
      out.push_back(cell_to_string(row[c]));
      width[c] = std::max(width[c], out.back().size());
    }
  }
  std::string text;
  auto line = [&](const std::vector<std::string>& values) {
    for (std::size_t c = 0; c < values.size(); ++c) {
      text += values[c];
      if (c + 1 < values.size()) text += std::string(width[c] - values[c].size() + 2, ' ');
    }
    text += '\n';
  };
  line(t.columns);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : cells) line(r);
  char footer[160];
  std::snprintf(footer, sizeof footer, "%zu row%s%s (planning %.1f ms, execution %.1f ms, %llu events scanned)\n",
                t.rows.size(), t.rows.size() == 1 ? "" : "s", t.truncated ? ", truncated" : "", t.stats.planning_ms,
                t.stats.execution_ms, static_cast<unsigned long long>(t.stats.scanned()));
  text += footer;
  return text;
}

Cell entity_cell(const Entity& e, std::string_view attribute) {
  auto v = e.attribute(attribute);
  if (!v) return std::string();
  if (const auto* i = std::get_if<std::int64_t>(&*v)) return *i;
  return std::get<std::string>(*v);
}

Cell event_cell(const Event& e, std::string_view attribute) {
  if (attribute == "id") return static_cast<std::int64_t>(e.id);
  if (attribute == "amount") return e.amount ? Cell{static_cast<std::int64_t>(*e.amount)} : Cell{std::string()};
  if (attribute == "start_ts") return e.start_ts;
  if (attribute == "end_ts") return e.end_ts;
  if (attribute == "agentid") return static_cast<std::int64_t>(e.agent_id);
  if (attribute == "seq") return static_cast<std::int64_t>(e.seq);
  if (attribute == "op") return std::string(to_string(e.op));
  return std::string();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_deadline(const ExecOptions& options) {
  if (options.deadline && Clock::now() > *options.deadline) throw QueryTimeout("query exceeded its time limit");
}

unsigned worker_count(const ExecOptions& options, std::size_t tasks) {
  unsigned w = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, tasks));
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
/// exception after all threads stop.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (std::size_t i; !failed && (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < workers; ++t) threads.emplace_back(body);
  body();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<Event> scan_query(const EventStore& store, const ScanPredicate& scan,
                              const std::vector<PartitionKey>& partitions, const ExecOptions& options,
                              ScanStats* stats) {
  check_deadline(options);
  if (!options.partitioned || partitions.size() <= 1) return store.scan(scan, stats);

  std::vector<std::vector<Event>> parts(partitions.size());
  std::vector<ScanStats> part_stats(partitions.size());
  parallel_for(partitions.size(), worker_count(options, partitions.size()), [&](std::size_t i) {
    check_deadline(options);
    parts[i] = store.scan_partition(partitions[i], scan, &part_stats[i]);
  });
  std::vector<Event> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.insert(out.end(), parts[i].begin(), parts[i].end());
    if (stats) *stats += part_stats[i];
  }
  std::sort(out.begin(), out.end(), event_less);
  return out;
}

namespace {

/// Matched event tuples of one (sub-)plan, textual pattern order.
struct JoinOutput {
  std::vector<std::vector<Event>> tuples;
  std::vector<ScanStats> stats;  // per textual pattern
};

EntityId role_id(const Event& e, bool subject) { return subject ? e.subject_id : e.object_id; }

JoinOutput join_plan(const ExecutionPlan& plan, const EventStore& store, const ExecOptions& options) {
  const std::size_t n = plan.queries.size();
  JoinOutput out;
  out.stats.resize(n);

  // Rows hold indices into matches[pattern]; kUnset for unscheduled patterns.
  constexpr std::uint32_t kUnset = ~0u;
  std::vector<std::vector<Event>> matches(n);
  std::vector<std::vector<std::uint32_t>> rows;
  std::vector<bool> scheduled(n, false);

  // The first scheduled (pattern, role) binding each var.
  auto binder = [&](const std::string& var) -> std::optional<std::pair<std::size_t, bool>> {
    for (std::size_t i : plan.order) {
      if (!scheduled[i]) continue;
      if (plan.queries[i].subject_var == var) return std::pair{i, true};
      if (plan.queries[i].object_var == var) return std::pair{i, false};
    }
    return std::nullopt;
  };
  auto row_event = [&](const std::vector<std::uint32_t>& row, std::size_t pattern) -> const Event& {
    return matches[pattern][row[pattern]];
  };

  for (std::size_t step = 0; step < plan.order.size(); ++step) {
    const std::size_t j = plan.order[step];
    const DataQuery& q = plan.queries[j];
    ScanPredicate scan = q.scan;

    auto subject_binder = binder(q.subject_var);
    auto object_binder = binder(q.object_var);

    if (options.propagate && step > 0) {
      auto narrow = [&](const std::optional<std::pair<std::size_t, bool>>& b,
                        std::optional<std::vector<EntityId>>& slot) {
        if (!b) return;
        std::set<EntityId> ids;
        for (const auto& row : rows) {
          ids.insert(role_id(row_event(row, b->first), b->second));
          if (ids.size() > kMaxResolvedIds) return;
        }
        slot = std::vector<EntityId>(ids.begin(), ids.end());
      };
      narrow(subject_binder, scan.subject_ids);
      narrow(object_binder, scan.object_ids);
      for (const auto& edge : plan.before) {
        if (edge.later == j && scheduled[edge.earlier]) {
          Timestamp lo = kMaxTimestamp;
          for (const auto& row : rows) lo = std::min(lo, row_event(row, edge.earlier).start_ts);
          scan.time.lo = std::max(scan.time.lo, lo == kMaxTimestamp ? lo : lo + 1);
        } else if (edge.earlier == j && scheduled[edge.later]) {
          Timestamp hi = kMinTimestamp;
          for (const auto& row : rows) hi = std::max(hi, row_event(row, edge.later).start_ts);
          scan.time.hi = std::min(scan.time.hi, hi);
        }
      }
      // The same bounds per bound entity: a candidate can only join rows that share it.
      auto narrow_times = [&](const std::optional<std::pair<std::size_t, bool>>& b,
                              const std::optional<std::vector<EntityId>>& ids,
                              std::optional<std::map<EntityId, TimeRange>>& slot) {
        if (!b || !ids) return;
        std::map<EntityId, TimeRange> ranges;
        bool bounded = false;
        for (const auto& row : rows) {
          TimeRange r;
          for (const auto& edge : plan.before) {
            if (edge.later == j && scheduled[edge.earlier]) {
              r.lo = std::max(r.lo, row_event(row, edge.earlier).start_ts + 1);
              bounded = true;
            } else if (edge.earlier == j && scheduled[edge.later]) {
              r.hi = std::min(r.hi, row_event(row, edge.later).start_ts);
              bounded = true;
            }
          }
          auto [it, fresh] = ranges.try_emplace(role_id(row_event(row, b->first), b->second), r);
          if (fresh) continue;
          if (it->second.empty()) {
            it->second = r;
          } else if (!r.empty()) {
            it->second = {std::min(it->second.lo, r.lo), std::max(it->second.hi, r.hi)};
          }
        }
        if (bounded) slot = std::move(ranges);
      };
      narrow_times(subject_binder, scan.subject_ids, scan.subject_times);
      narrow_times(object_binder, scan.object_ids, scan.object_times);
    }

    std::vector<PartitionKey> partitions = plan.partitions[j];
    if (!(scan.time == q.scan.time)) {
      std::erase_if(partitions, [&](const PartitionKey& k) {
        return TimeRange{k.day * kMillisPerDay, (k.day + 1) * kMillisPerDay}.intersect(scan.time).empty();
      });
    }
    matches[j] = scan.time.empty() ? std::vector<Event>{} : scan_query(store, scan, partitions, options, &out.stats[j]);
    if (q.subject_var == q.object_var)
      std::erase_if(matches[j], [](const Event& e) { return e.subject_id != e.object_id; });
    out.stats[j].matched = matches[j].size();

    // Temporal checks against already scheduled patterns.
    std::vector<BeforeEdge> checks;
    for (const auto& edge : plan.before) {
      if ((edge.later == j && scheduled[edge.earlier]) || (edge.earlier == j && scheduled[edge.later]))
        checks.push_back(edge);
    }
    auto temporal_ok = [&](const std::vector<std::uint32_t>& row, const Event& e) {
      for (const auto& edge : checks) {
        const Timestamp a = edge.earlier == j ? e.start_ts : row_event(row, edge.earlier).start_ts;
        const Timestamp b = edge.later == j ? e.start_ts : row_event(row, edge.later).start_ts;
        if (!(a < b)) return false;
      }
      return true;
    };

    std::vector<std::vector<std::uint32_t>> next;
    if (step == 0) {
      for (std::uint32_t m = 0; m < matches[j].size(); ++m) {
        std::vector<std::uint32_t> row(n, kUnset);
        row[j] = m;
        next.push_back(std::move(row));
      }
    } else {
      // Join keys: this pattern's vars already bound by scheduled patterns.
      std::vector<std::pair<bool, std::pair<std::size_t, bool>>> keys;  // (role in j, binder)
      if (subject_binder) keys.push_back({true, *subject_binder});
      if (object_binder && q.object_var != q.subject_var) keys.push_back({false, *object_binder});

      std::size_t work = 0;
      auto emit = [&](const std::vector<std::uint32_t>& row, std::uint32_t m) {
        if (++work % 4096 == 0) check_deadline(options);
        if (!temporal_ok(row, matches[j][m])) return;
        auto joined = row;
        joined[j] = m;
        next.push_back(std::move(joined));
      };
      if (keys.empty()) {
        for (const auto& row : rows)
          for (std::uint32_t m = 0; m < matches[j].size(); ++m) emit(row, m);
      } else {
        auto key_of_match = [&](const Event& e) {
          std::vector<EntityId> key;
          for (const auto& k : keys) key.push_back(role_id(e, k.first));
          return key;
        };
        std::map<std::vector<EntityId>, std::vector<std::uint32_t>> index;
        for (std::uint32_t m = 0; m < matches[j].size(); ++m) index[key_of_match(matches[j][m])].push_back(m);
        std::vector<EntityId> key(keys.size());
        for (const auto& row : rows) {
          for (std::size_t k = 0; k < keys.size(); ++k)
            key[k] = role_id(row_event(row, keys[k].second.first), keys[k].second.second);
          auto it = index.find(key);
          if (it == index.end()) continue;
          for (std::uint32_t m : it->second) emit(row, m);
        }
      }
    }
    rows = std::move(next);
    scheduled[j] = true;
    if (rows.empty()) break;
  }

  if (std::all_of(scheduled.begin(), scheduled.end(), [](bool s) { return s; })) {
    for (const auto& row : rows) {
      std::vector<Event> tuple;
      tuple.reserve(n);
      for (std::size_t i = 0; i < n; ++i) tuple.push_back(matches[i][row[i]]);
      out.tuples.push_back(std::move(tuple));
    }
  }
  return out;
}

std::string projection_column(const ReturnItem& item, const std::map<std::string, EntityKind>& vars) {
  switch (item.kind) {
    case ReturnItem::Kind::Var: {
      auto it = vars.find(item.var);
      return item.var + "." + std::string(it == vars.end() ? "id" : default_attribute(it->second));
    }
    case ReturnItem::Kind::Attribute: return item.var + "." + item.attribute;
    case ReturnItem::Kind::Aggregate: return item.output;
  }
  return item.var;
}

/// Entity var -> kind, from the patterns of a plan.
std::map<std::string, EntityKind> var_kinds(const ExecutionPlan& plan) {
  std::map<std::string, EntityKind> out;
  for (const auto& q : plan.queries) {
    out.emplace(q.subject_var, EntityKind::Process);
    out.emplace(q.object_var, q.object_kind);
  }
  return out;
}

void finish_rows(ResultTable& table, const ReturnClause& ret, const ExecOptions& options) {
  if (ret.distinct) {
    std::set<std::vector<Cell>> seen;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::vector<EventId>> events;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (!seen.insert(table.rows[i]).second) continue;
      rows.push_back(std::move(table.rows[i]));
      if (i < table.row_events.size()) events.push_back(std::move(table.row_events[i]));
    }
    table.rows = std::move(rows);
    table.row_events = std::move(events);
  }
  if (options.max_rows && table.rows.size() > *options.max_rows) {
    table.rows.resize(*options.max_rows);
    if (table.row_events.size() > *options.max_rows) table.row_events.resize(*options.max_rows);
    table.truncated = true;
  }
}

}  // namespace

ResultTable execute_multievent(const ExecutionPlan& plan, const EventStore& store, const ExecOptions& options) {
  const auto t0 = Clock::now();
  const std::size_t n = plan.queries.size();
  JoinOutput joined;
  joined.stats.resize(n);

  std::vector<ExecutionPlan> subplans = options.partitioned ? partition_subqueries(plan, store)
                                                            : std::vector<ExecutionPlan>{plan};
  if (subplans.size() == 1) {
    joined = join_plan(subplans.front(), store, options);
  } else {
    // Sub-plans run side by side; their own scans stay sequential.
    ExecOptions inner = options;
    inner.partitioned = false;
    std::vector<JoinOutput> parts(subplans.size());
    parallel_for(subplans.size(), worker_count(options, subplans.size()),
                 [&](std::size_t i) { parts[i] = join_plan(subplans[i], store, inner); });
    for (auto& part : parts) {
      for (std::size_t i = 0; i < n; ++i) joined.stats[i] += part.stats[i];
      std::move(part.tuples.begin(), part.tuples.end(), std::back_inserter(joined.tuples));
    }
  }

  std::sort(joined.tuples.begin(), joined.tuples.end(), [](const std::vector<Event>& a, const std::vector<Event>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), event_less);
  });

  ResultTable table;
  const auto kinds = var_kinds(plan);
  for (const auto& item : plan.ret.items) table.columns.push_back(projection_column(item, kinds));

  // Resolve each return item to a (pattern, role) once.
  struct Source {
    std::size_t pattern = 0;
    enum { Subject, Object, Event } role = Subject;
    std::string attribute;
  };
  std::vector<Source> sources;
  for (const auto& item : plan.ret.items) {
    Source s;
    bool found = false;
    for (std::size_t i = 0; i < n && !found; ++i) {
      const auto& q = plan.queries[i];
      if (q.alias == item.var) {
        s = {i, Source::Event, item.attribute};
        found = true;
      } else if (q.subject_var == item.var || q.object_var == item.var) {
        s.pattern = i;
        s.role = q.subject_var == item.var ? Source::Subject : Source::Object;
        s.attribute = item.kind == ReturnItem::Kind::Var ? std::string(default_attribute(kinds.at(item.var)))
                                                         : item.attribute;
        found = true;
      }
    }
    if (!found) throw Error("return item " + item.var + " is not bound by any pattern");
    sources.push_back(std::move(s));
  }

  for (const auto& tuple : joined.tuples) {
    std::vector<Cell> row;
    for (const auto& s : sources) {
      const Event& e = tuple[s.pattern];
      if (s.role == Source::Event) {
        row.push_back(event_cell(e, s.attribute));
      } else {
        row.push_back(entity_cell(store.entity_ref(s.role == Source::Subject ? e.subject_id : e.object_id), s.attribute));
      }
    }
    table.rows.push_back(std::move(row));
    std::vector<EventId> ids;
    for (const auto& e : tuple) ids.push_back(e.id);
    table.row_events.push_back(std::move(ids));
  }
  finish_rows(table, plan.ret, options);

  for (std::size_t i = 0; i < n; ++i)
    table.stats.per_pattern.push_back(
        {plan.queries[i].alias, plan.estimates[i], joined.stats[i].examined, joined.stats[i].matched});
  table.stats.execution_ms = ms_since(t0);
  return table;
}

namespace {

struct Accumulator {
  std::uint64_t events = 0;
  std::uint64_t present = 0;
  double sum = 0;
  double min = 0;
  double max = 0;

  void add(std::optional<double> v) {
    ++events;
    if (!v) return;
    if (present == 0 || *v < min) min = *v;
    if (present == 0 || *v > max) max = *v;
    sum += *v;
    ++present;
  }

  double value(AggregateFn fn, bool has_attribute) const {
    switch (fn) {
      case AggregateFn::Count: return static_cast<double>(has_attribute ? present : events);
      case AggregateFn::Sum: return sum;
      case AggregateFn::Avg: return present ? sum / static_cast<double>(present) : 0.0;
      case AggregateFn::Min: return min;
      case AggregateFn::Max: return max;
    }
    return 0;
  }
};

std::optional<double> numeric(const Event& e, std::string_view attribute) {
  Cell c = event_cell(e, attribute);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return std::nullopt;
}

using GroupKey = std::vector<EntityId>;
using Frames = std::map<Timestamp, std::vector<double>>;  // window_start -> aggregate values

struct HavingValue {
  double value = 0;
  bool missing_history = false;
};

HavingValue evaluate_having(const Expr& e, const Frames& frames, Timestamp start, Timestamp step,
                            const std::map<std::string, std::size_t>& outputs) {
  switch (e.kind) {
    case Expr::Kind::Number: return {e.number, false};
    case Expr::Kind::Ref: {
      auto it = frames.find(start - static_cast<Timestamp>(e.history) * step);
      if (it == frames.end()) return {0.0, true};
      return {it->second[outputs.at(e.name)], false};
    }
    case Expr::Kind::Binary: break;
  }
  HavingValue a = evaluate_having(e.operands[0], frames, start, step, outputs);
  HavingValue b = evaluate_having(e.operands[1], frames, start, step, outputs);
  double v = 0;
  switch (e.op) {
    case Expr::Op::Add: v = a.value + b.value; break;
    case Expr::Op::Sub: v = a.value - b.value; break;
    case Expr::Op::Mul: v = a.value * b.value; break;
    case Expr::Op::Div: v = a.value / b.value; break;
    case Expr::Op::Lt: v = a.value < b.value; break;
    case Expr::Op::Le: v = a.value <= b.value; break;
    case Expr::Op::Gt: v = a.value > b.value; break;
    case Expr::Op::Ge: v = a.value >= b.value; break;
    case Expr::Op::Eq: v = a.value == b.value; break;
    case Expr::Op::Ne: v = a.value != b.value; break;
    case Expr::Op::And: v = a.value != 0 && b.value != 0; break;
    case Expr::Op::Or: v = a.value != 0 || b.value != 0; break;
  }
  return {v, a.missing_history || b.missing_history};
}

}  // namespace

ResultTable execute_anomaly(const ExecutionPlan& plan, const EventStore& store, const ExecOptions& options) {
  const auto t0 = Clock::now();
  if (!plan.anomaly || plan.queries.size() != 1) throw Error("not an anomaly plan");
  const AnomalyClause& a = *plan.anomaly;
  const DataQuery& q = plan.queries.front();

  ScanStats scan_stats;
  std::vector<Event> events = scan_query(store, q.scan, plan.partitions.front(), options, &scan_stats);
  if (q.subject_var == q.object_var)
    std::erase_if(events, [](const Event& e) { return e.subject_id != e.object_id; });
  scan_stats.matched = events.size();

  std::vector<bool> group_is_subject;
  for (const auto& var : a.group_by) group_is_subject.push_back(var == q.subject_var);

  std::vector<const ReturnItem*> aggregates;
  std::map<std::string, std::size_t> outputs;
  for (const auto& item : plan.ret.items) {
    if (item.kind != ReturnItem::Kind::Aggregate) continue;
    outputs[item.output] = aggregates.size();
    aggregates.push_back(&item);
  }

  const Timestamp anchor = plan.globals.time ? plan.globals.time->lo : 0;
  const Timestamp window = a.window_ms, step = a.step_ms;

  std::map<GroupKey, std::map<Timestamp, std::vector<Accumulator>>> acc;
  std::size_t work = 0;
  for (const Event& e : events) {
    if (++work % 4096 == 0) check_deadline(options);
    if (e.start_ts < anchor) continue;
    GroupKey key;
    for (bool subject : group_is_subject) key.push_back(subject ? e.subject_id : e.object_id);
    auto& frames = acc[key];
    // Windows [s, s + window) on the grid anchor + k * step, k >= 0, that contain start_ts.
    const Timestamp k_hi = floor_div(e.start_ts - anchor, step);
    const Timestamp k_lo = std::max<Timestamp>(0, floor_div(e.start_ts - anchor - window, step) + 1);
    for (Timestamp k = k_lo; k <= k_hi; ++k) {
      auto& slots = frames[anchor + k * step];
      if (slots.empty()) slots.resize(aggregates.size());
      for (std::size_t i = 0; i < aggregates.size(); ++i)
        slots[i].add(aggregates[i]->attribute.empty() ? std::optional<double>(0.0)
                                                      : numeric(e, aggregates[i]->attribute));
    }
  }

  struct Flagged {
    Timestamp start;
    const GroupKey* key;
    std::vector<double> values;
  };
  std::vector<Flagged> flagged;
  for (const auto& [key, frame_acc] : acc) {
    Frames frames;
    for (const auto& [start, slots] : frame_acc) {
      auto& values = frames[start];
      for (std::size_t i = 0; i < aggregates.size(); ++i)
        values.push_back(slots[i].value(aggregates[i]->fn, !aggregates[i]->attribute.empty()));
    }
    for (const auto& [start, values] : frames) {
      if (a.having) {
        HavingValue h = evaluate_having(*a.having, frames, start, step, outputs);
        if (h.value == 0 || h.missing_history) continue;
      }
      flagged.push_back({start, &key, values});
    }
  }
  std::sort(flagged.begin(), flagged.end(), [](const Flagged& x, const Flagged& y) {
    return std::tie(x.start, *x.key) < std::tie(y.start, *y.key);
  });

  ResultTable table;
  const auto kinds = var_kinds(plan);
  for (const auto& item : plan.ret.items) table.columns.push_back(projection_column(item, kinds));
  table.columns.push_back("window_start");
  for (const auto& f : flagged) {
    std::vector<Cell> row;
    for (const auto& item : plan.ret.items) {
      if (item.kind == ReturnItem::Kind::Aggregate) {
        double v = f.values[outputs.at(item.output)];
        if (item.fn == AggregateFn::Avg) {
          row.push_back(v);
        } else {
          row.push_back(static_cast<std::int64_t>(std::llround(v)));
        }
        continue;
      }
      auto g = std::find(a.group_by.begin(), a.group_by.end(), item.var);
      const Entity& entity = store.entity_ref((*f.key)[static_cast<std::size_t>(g - a.group_by.begin())]);
      row.push_back(entity_cell(entity, item.kind == ReturnItem::Kind::Var
                                            ? default_attribute(kinds.at(item.var))
                                            : std::string_view(item.attribute)));
    }
    row.push_back(f.start);
    table.rows.push_back(std::move(row));
  }
  finish_rows(table, plan.ret, options);
  table.stats.per_pattern.push_back({q.alias, plan.estimates.front(), scan_stats.examined, scan_stats.matched});
  table.stats.execution_ms = ms_since(t0);
  return table;
}

ResultTable execute_ast(const QueryAst& ast, const EventStore& store, const ExecOptions& options) {
  const auto t0 = Clock::now();
  ExecutionPlan plan = plan_query(ast, store, options.scheduler);
  const double planning = ms_since(t0);
  ResultTable table = plan.kind == QueryKind::Anomaly ? execute_anomaly(plan, store, options)
                                                      : execute_multievent(plan, store, options);
  table.stats.planning_ms = planning;
  return table;
}

QueryOutcome execute(std::string_view source, const EventStore& store, const ExecOptions& options) {
  QueryOutcome out;
  auto parsed = parse(source);
  if (!parsed.ok()) {
    out.diagnostics = std::move(parsed.diagnostics);
    return out;
  }
  out.table = execute_ast(*parsed.ast, store, options);
  return out;
}

}  // namespace aiql
