// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aiql/lexer.hpp"
#include "aiql/planner.hpp"

namespace aiql {

class QueryTimeout : public Error {
 public:
  using Error::Error;
};

/// A result cell. Missing attributes render as the empty string.
using Cell = std::variant<std::int64_t, double, std::string>;

std::string cell_to_string(const Cell& c);

struct PatternStats {
  std::string alias;
  double estimated = 0;
  std::uint64_t scanned = 0;
  std::uint64_t matched = 0;
};

struct ExecStats {
  double planning_ms = 0;
  double execution_ms = 0;
  std::vector<PatternStats> per_pattern;  // textual order

  std::uint64_t scanned() const;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Multievent only: the event ids (textual pattern order) behind each row
  /// before `distinct` was applied; after it, the first binding per row.
  std::vector<std::vector<EventId>> row_events;
  ExecStats stats;
  bool truncated = false;
};

nlohmann::json to_json(const ResultTable& t);
nlohmann::json to_json(const ExecStats& s);

/// Aligned columns plus a row-count footer.
std::string to_text(const ResultTable& t);

struct ExecOptions {
  Scheduler scheduler = Scheduler::Optimized;
  /// Scatter scans over partitions on a worker pool and split plans per agent
  /// where possible.
  bool partitioned = true;
  /// Narrow later scans with ids and time bounds of already matched patterns.
  bool propagate = true;
  /// 0 means hardware concurrency.
  unsigned workers = 0;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  /// Stop after this many rows and set `truncated`.
  std::optional<std::size_t> max_rows;
};

/// Events matching one DataQuery, in event order.
std::vector<Event> scan_query(const EventStore& store, const ScanPredicate& scan,
                              const std::vector<PartitionKey>& partitions, const ExecOptions& options,
                              ScanStats* stats);

ResultTable execute_multievent(const ExecutionPlan& plan, const EventStore& store, const ExecOptions& options = {});
ResultTable execute_anomaly(const ExecutionPlan& plan, const EventStore& store, const ExecOptions& options = {});

/// Plans and executes a validated AST.
ResultTable execute_ast(const QueryAst& ast, const EventStore& store, const ExecOptions& options = {});

struct QueryOutcome {
  std::optional<ResultTable> table;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return table.has_value(); }
};

/// Parse, plan, execute.
QueryOutcome execute(std::string_view source, const EventStore& store, const ExecOptions& options = {});

/// Value of `var.attr` for a projection; `id` and `agentid` are always present.
Cell entity_cell(const Entity& e, std::string_view attribute);
Cell event_cell(const Event& e, std::string_view attribute);

}  // namespace aiql
