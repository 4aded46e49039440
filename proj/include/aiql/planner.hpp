// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aiql/ast.hpp"
#include "aiql/event_store.hpp"

namespace aiql {

class UncompilablePath : public Error {
 public:
  using Error::Error;
};

/// Scan specification for one event pattern.
struct DataQuery {
  std::string alias;
  std::string subject_var;
  std::string object_var;
  EntityKind object_kind = EntityKind::File;
  ScanPredicate scan;
};

/// Two patterns that bind the same entity variable.
struct SharedVar {
  std::string var;
  std::size_t left = 0;  // textual pattern index
  bool left_is_subject = true;
  std::size_t right = 0;
  bool right_is_subject = true;
};

/// `patterns[earlier].start_ts < patterns[later].start_ts`
struct BeforeEdge {
  std::size_t earlier = 0;
  std::size_t later = 0;
};

enum class Scheduler : std::uint8_t { Optimized, Textual, Reversed };

std::string_view to_string(Scheduler s);
std::optional<Scheduler> parse_scheduler(std::string_view text);

struct ExecutionPlan {
  QueryKind kind = QueryKind::Multievent;
  GlobalClause globals;
  std::vector<DataQuery> queries;                 // textual order
  std::vector<double> estimates;                  // per textual index
  std::vector<std::size_t> order;                 // execution order, textual indices
  std::vector<std::vector<PartitionKey>> partitions;  // per textual index
  std::vector<SharedVar> shared;
  std::vector<BeforeEdge> before;
  ReturnClause ret;
  std::optional<AnomalyClause> anomaly;
};

/// Rewrites a dependency path into the equivalent multievent query, one
/// event pattern per edge (aliases evt1..evtN).
QueryAst compile_dependency(const QueryAst& ast);

/// One DataQuery per pattern, with the global clause and entity predicates
/// pushed down.
std::vector<DataQuery> synthesize_data_queries(const QueryAst& multievent);

/// Estimates, orders and attaches partition lists. Ties in the optimized
/// order keep textual order.
ExecutionPlan schedule(const QueryAst& multievent, std::vector<DataQuery> queries, const EventStore& store,
                       Scheduler scheduler = Scheduler::Optimized);

/// Full front half of the pipeline for any query kind.
ExecutionPlan plan_query(const QueryAst& ast, const EventStore& store, Scheduler scheduler = Scheduler::Optimized);

/// Whether every result row is confined to one agent, so the plan can be run
/// as independent per-agent sub-plans.
bool splittable_by_agent(const ExecutionPlan& plan);

/// Independent per-agent sub-plans, or just the plan itself when it cannot
/// be split. Results of the sub-plans concatenate to the plan's results.
std::vector<ExecutionPlan> partition_subqueries(const ExecutionPlan& plan, const EventStore& store);

nlohmann::json to_json(const ExecutionPlan& plan);

}  // namespace aiql
