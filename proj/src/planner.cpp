// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/planner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace aiql {

std::string_view to_string(Scheduler s) {
  switch (s) {
    case Scheduler::Optimized: return "optimized";
    case Scheduler::Textual: return "textual";
    case Scheduler::Reversed: return "reversed";
  }
  return "?";
}

std::optional<Scheduler> parse_scheduler(std::string_view text) {
  if (text == "optimized") return Scheduler::Optimized;
  if (text == "textual") return Scheduler::Textual;
  if (text == "reversed") return Scheduler::Reversed;
  return std::nullopt;
}

QueryAst compile_dependency(const QueryAst& ast) {
  if (ast.kind != QueryKind::Dependency || !ast.path) throw UncompilablePath("not a dependency query");
  const DependencyPath& path = *ast.path;
  if (path.nodes.size() != path.edges.size() + 1 || path.edges.empty())
    throw UncompilablePath("path needs one more node than edges");

  QueryAst out;
  out.kind = QueryKind::Multievent;
  out.globals = ast.globals;
  out.ret = ast.ret;
  for (std::size_t i = 0; i < path.edges.size(); ++i) {
    const EntityPattern& left = path.nodes[i];
    const EntityPattern& right = path.nodes[i + 1];
    auto subject_left = edge_subject_is_left(left.kind, path.edges[i].arrow, right.kind);
    if (!subject_left) throw UncompilablePath("edge " + std::to_string(i + 1) + " joins two non-process entities");
    EventPattern ev;
    ev.subject = *subject_left ? left : right;
    ev.object = *subject_left ? right : left;
    ev.ops = path.edges[i].ops;
    ev.alias = "evt" + std::to_string(i + 1);
    ev.span = path.edges[i].span;
    out.patterns.push_back(std::move(ev));
  }
  for (std::size_t i = 0; i + 1 < out.patterns.size(); ++i) {
    TemporalConstraint c;
    c.relation = TemporalRelation::Before;
    c.left = out.patterns[i].alias;
    c.right = out.patterns[i + 1].alias;
    if (path.direction == Direction::Backward) std::swap(c.left, c.right);
    out.constraints.push_back(std::move(c));
  }
  return out;
}

namespace {

ScanPredicate base_scan(const GlobalClause& globals) {
  ScanPredicate scan;
  if (globals.time) scan.time = *globals.time;
  scan.agents = globals.agents;
  return scan;
}

DataQuery data_query(const EventPattern& ev, const GlobalClause& globals) {
  DataQuery q;
  q.alias = ev.alias;
  q.subject_var = ev.subject.var;
  q.object_var = ev.object.var;
  q.object_kind = ev.object.kind;
  q.scan = base_scan(globals);
  q.scan.ops = ev.ops;
  q.scan.object_kind = ev.object.kind;
  q.scan.subject = ev.subject.predicate;
  q.scan.object = ev.object.predicate;
  return q;
}

std::size_t alias_index(const std::vector<DataQuery>& qs, const std::string& alias) {
  for (std::size_t i = 0; i < qs.size(); ++i)
    if (qs[i].alias == alias) return i;
  throw Error("unknown alias " + alias);
}

}  // namespace

std::vector<DataQuery> synthesize_data_queries(const QueryAst& ast) {
  std::vector<DataQuery> out;
  if (ast.kind == QueryKind::Anomaly) {
    out.push_back(data_query(ast.anomaly->pattern, ast.globals));
    return out;
  }
  for (const auto& ev : ast.patterns) out.push_back(data_query(ev, ast.globals));
  return out;
}

ExecutionPlan schedule(const QueryAst& ast, std::vector<DataQuery> queries, const EventStore& store,
                       Scheduler scheduler) {
  ExecutionPlan plan;
  plan.kind = ast.kind;
  plan.globals = ast.globals;
  plan.ret = ast.ret;
  plan.anomaly = ast.anomaly;
  plan.queries = std::move(queries);

  const std::size_t n = plan.queries.size();
  for (const auto& q : plan.queries) {
    plan.estimates.push_back(store.estimate_count(q.scan));
    plan.partitions.push_back(store.candidate_partitions(q.scan.time, q.scan.agents));
  }

  plan.order.resize(n);
  std::iota(plan.order.begin(), plan.order.end(), 0);
  if (scheduler == Scheduler::Optimized) {
    std::stable_sort(plan.order.begin(), plan.order.end(),
                     [&](std::size_t a, std::size_t b) { return plan.estimates[a] < plan.estimates[b]; });
  } else if (scheduler == Scheduler::Reversed) {
    std::reverse(plan.order.begin(), plan.order.end());
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = plan.queries[i];
      const auto& b = plan.queries[j];
      for (bool a_subject : {true, false}) {
        const std::string& va = a_subject ? a.subject_var : a.object_var;
        for (bool b_subject : {true, false}) {
          const std::string& vb = b_subject ? b.subject_var : b.object_var;
          if (va == vb) plan.shared.push_back({va, i, a_subject, j, b_subject});
        }
      }
    }
  }
  for (const auto& c : ast.constraints) {
    std::size_t l = alias_index(plan.queries, c.left);
    std::size_t r = alias_index(plan.queries, c.right);
    plan.before.push_back(c.relation == TemporalRelation::Before ? BeforeEdge{l, r} : BeforeEdge{r, l});
  }
  return plan;
}

ExecutionPlan plan_query(const QueryAst& ast, const EventStore& store, Scheduler scheduler) {
  if (ast.kind == QueryKind::Dependency) {
    QueryAst compiled = compile_dependency(ast);
    return schedule(compiled, synthesize_data_queries(compiled), store, scheduler);
  }
  return schedule(ast, synthesize_data_queries(ast), store, scheduler);
}

bool splittable_by_agent(const ExecutionPlan& plan) {
  if (plan.kind != QueryKind::Multievent || plan.queries.empty()) return false;
  // A connect to a process is the only event whose object may sit on another host.
  for (const auto& q : plan.queries) {
    if (q.object_kind == EntityKind::Process && (!q.scan.ops || q.scan.ops->contains(Operation::Connect)))
      return false;
  }
  // Every pattern must reach every other through shared entities; otherwise
  // rows may combine events from different hosts.
  const std::size_t n = plan.queries.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& s : plan.shared) parent[find(s.left)] = find(s.right);
  for (std::size_t i = 1; i < n; ++i)
    if (find(i) != find(0)) return false;
  return true;
}

std::vector<ExecutionPlan> partition_subqueries(const ExecutionPlan& plan, const EventStore& store) {
  if (!splittable_by_agent(plan)) return {plan};
  std::set<AgentId> agents;
  for (const auto& parts : plan.partitions)
    for (const auto& key : parts) agents.insert(key.agent_id);
  if (agents.size() <= 1) return {plan};

  std::vector<ExecutionPlan> out;
  for (AgentId agent : agents) {
    ExecutionPlan sub = plan;
    sub.globals.agents = std::vector<AgentId>{agent};
    for (std::size_t i = 0; i < sub.queries.size(); ++i) {
      auto& scan = sub.queries[i].scan;
      if (scan.agents && std::find(scan.agents->begin(), scan.agents->end(), agent) == scan.agents->end()) {
        scan.agents = std::vector<AgentId>{};
      } else {
        scan.agents = std::vector<AgentId>{agent};
      }
      sub.partitions[i] = store.candidate_partitions(scan.time, scan.agents);
    }
    out.push_back(std::move(sub));
  }
  return out;
}

namespace {

nlohmann::json scan_json(const ScanPredicate& s) {
  nlohmann::json j;
  j["time"] = {{"lo", s.time.lo}, {"hi", s.time.hi}};
  if (s.agents) j["agents"] = *s.agents;
  if (s.ops) {
    auto ops = nlohmann::json::array();
    for (Operation op : s.ops->to_vector()) ops.push_back(std::string(to_string(op)));
    j["ops"] = ops;
  }
  if (s.object_kind) j["object_kind"] = std::string(to_string(*s.object_kind));
  j["subject"] = to_source(s.subject);
  j["object"] = to_source(s.object);
  return j;
}

}  // namespace

nlohmann::json to_json(const ExecutionPlan& plan) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(plan.kind));
  auto order = nlohmann::json::array();
  for (std::size_t i : plan.order) order.push_back(plan.queries[i].alias);
  j["order"] = order;
  auto patterns = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.queries.size(); ++i) {
    const auto& q = plan.queries[i];
    auto parts = nlohmann::json::array();
    for (const auto& key : plan.partitions[i]) parts.push_back({{"agent_id", key.agent_id}, {"day", key.day}});
    patterns.push_back({{"alias", q.alias},
                        {"subject_var", q.subject_var},
                        {"object_var", q.object_var},
                        {"estimated", plan.estimates[i]},
                        {"scan", scan_json(q.scan)},
                        {"partitions", parts}});
  }
  j["patterns"] = patterns;
  auto joins = nlohmann::json::array();
  for (const auto& s : plan.shared)
    joins.push_back({{"var", s.var}, {"left", plan.queries[s.left].alias}, {"right", plan.queries[s.right].alias}});
  j["shared_vars"] = joins;
  auto before = nlohmann::json::array();
  for (const auto& b : plan.before)
    before.push_back({{"earlier", plan.queries[b.earlier].alias}, {"later", plan.queries[b.later].alias}});
  j["before"] = before;
  j["agent_splittable"] = splittable_by_agent(plan);
  if (plan.anomaly) {
    j["window_ms"] = plan.anomaly->window_ms;
    j["step_ms"] = plan.anomaly->step_ms;
    j["group_by"] = plan.anomaly->group_by;
  }
  return j;
}

}  // namespace aiql
