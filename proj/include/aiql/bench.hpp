// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aiql/executor.hpp"

namespace aiql {

/// Schedulers disagreed on a query's results; no timings are reported.
class ResultMismatch : public Error {
 public:
  using Error::Error;
};

struct BenchQuery {
  std::string id;
  std::string text;
};

/// Two-pattern investigation queries, one per rare destination address
/// (at most `max_selectivity` of all events). The selective pattern is
/// written last so textual order scans the broad pattern first.
std::vector<BenchQuery> scheduling_suite(const EventStore& store, std::size_t count, double max_selectivity = 1e-4,
                                         std::uint64_t seed = 1);

struct BenchOptions {
  std::vector<Scheduler> schedulers = {Scheduler::Optimized, Scheduler::Textual, Scheduler::Reversed};
  /// Runs per scheduler; the first is a warm-up and is not timed.
  unsigned repetitions = 5;
  unsigned workers = 0;
  /// Test hook: may alter a scheduler's result before the equality gate.
  std::function<void(const BenchQuery&, Scheduler, ResultTable&)> tamper;
};

struct BenchRow {
  std::string query_id;
  Scheduler scheduler = Scheduler::Optimized;
  double median_ms = 0;
  std::uint64_t scanned = 0;
  std::uint64_t matched = 0;  // result rows
};

struct BenchReport {
  std::vector<BenchRow> rows;

  /// Row for (query, scheduler), or nullptr.
  const BenchRow* find(const std::string& query_id, Scheduler s) const;
};

/// Checks result equality across schedulers for every query, then times them.
/// Throws ResultMismatch before any timing when results differ.
BenchReport run_bench(const EventStore& store, const std::vector<BenchQuery>& queries, const BenchOptions& options = {});

/// `query_id,scheduler,median_ms,scanned,matched`
std::string to_csv(const BenchReport& report);

/// Per-query table with speedup and scan ratios against the optimized run.
std::string to_text(const BenchReport& report);

}  // namespace aiql
