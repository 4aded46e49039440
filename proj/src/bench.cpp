// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>

#include "aiql/parser.hpp"

namespace aiql {

std::vector<BenchQuery> scheduling_suite(const EventStore& store, std::size_t count, double max_selectivity,
                                         std::uint64_t seed) {
  const auto events = store.all_events();
  const double limit = max_selectivity * static_cast<double>(events.size());
  std::map<EntityId, std::uint64_t> per_channel;
  for (const auto& e : events) ++per_channel[e.object_id];

  std::map<std::string, std::uint64_t> per_address;
  for (const auto& [id, n] : per_channel) {
    const Entity& e = store.entity_ref(id);
    if (e.kind != EntityKind::NetChannel) continue;
    if (auto ip = e.attribute("dst_ip")) per_address[std::get<std::string>(*ip)] += n;
  }
  std::vector<std::string> rare;
  for (const auto& [ip, n] : per_address)
    if (static_cast<double>(n) <= limit) rare.push_back(ip);

  std::mt19937_64 rng(seed);
  std::shuffle(rare.begin(), rare.end(), rng);
  if (rare.size() > count) rare.resize(count);
  std::sort(rare.begin(), rare.end());

  std::vector<BenchQuery> out;
  for (std::size_t i = 0; i < rare.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "q%02zu", i + 1);
    out.push_back({id,
                   "proc p1 write file f1 as e1\n"
                   "proc p1 write ip i1[dstip = \"" +
                       rare[i] +
                       "\"] as e2\n"
                       "with e1 before e2\n"
                       "return distinct p1, f1, i1"});
  }
  return out;
}

const BenchRow* BenchReport::find(const std::string& query_id, Scheduler s) const {
  for (const auto& r : rows)
    if (r.query_id == query_id && r.scheduler == s) return &r;
  return nullptr;
}

namespace {

ResultTable run_once(const QueryAst& ast, const EventStore& store, Scheduler s, unsigned workers) {
  ExecOptions opts;
  opts.scheduler = s;
  opts.workers = workers;
  return execute_ast(ast, store, opts);
}

}  // namespace

BenchReport run_bench(const EventStore& store, const std::vector<BenchQuery>& queries, const BenchOptions& options) {
  if (options.schedulers.empty()) throw Error("no schedulers to compare");
  std::vector<QueryAst> asts;
  for (const auto& q : queries) {
    auto parsed = parse(q.text);
    if (!parsed.ok())
      throw Error("bench query " + q.id + " does not parse: " + parsed.diagnostics.front().message);
    asts.push_back(std::move(*parsed.ast));
  }

  // Correctness gate first: every scheduler must agree before anything is timed.
  for (std::size_t i = 0; i < queries.size(); ++i) {
    std::optional<ResultTable> reference;
    for (Scheduler s : options.schedulers) {
      ResultTable t = run_once(asts[i], store, s, options.workers);
      if (options.tamper) options.tamper(queries[i], s, t);
      if (!reference) {
        reference = std::move(t);
      } else if (t.rows != reference->rows || t.row_events != reference->row_events) {
        throw ResultMismatch("query " + queries[i].id + ": " + std::string(to_string(s)) + " returned " +
                             std::to_string(t.rows.size()) + " rows, " +
                             std::string(to_string(options.schedulers.front())) + " returned " +
                             std::to_string(reference->rows.size()));
      }
    }
  }

  BenchReport report;
  const unsigned reps = std::max(2u, options.repetitions);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (Scheduler s : options.schedulers) {
      std::vector<double> times;
      ResultTable last;
      for (unsigned r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        last = run_once(asts[i], store, s, options.workers);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (r > 0) times.push_back(ms);
      }
      std::sort(times.begin(), times.end());
      const std::size_t n = times.size();
      const double median = n % 2 ? times[n / 2] : (times[n / 2 - 1] + times[n / 2]) / 2;
      report.rows.push_back({queries[i].id, s, median, last.stats.scanned(), last.rows.size()});
    }
  }
  return report;
}

std::string to_csv(const BenchReport& report) {
  std::string out = "query_id,scheduler,median_ms,scanned,matched\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%llu,%llu\n", r.query_id.c_str(), std::string(to_string(r.scheduler)).c_str(),
                  r.median_ms, static_cast<unsigned long long>(r.scanned), static_cast<unsigned long long>(r.matched));
    out += buf;
  }
  return out;
}

std::string to_text(const BenchReport& report) {
  std::vector<std::string> ids;
  for (const auto& r : report.rows)
    if (std::find(ids.begin(), ids.end(), r.query_id) == ids.end()) ids.push_back(r.query_id);

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %-10s %12s %12s %8s %9s %10s\n", "query", "scheduler", "median_ms", "scanned",
                "rows", "speedup", "scan_ratio");
  out += buf;
  for (const auto& id : ids) {
    const BenchRow* base = report.find(id, Scheduler::Optimized);
    for (const auto& r : report.rows) {
      if (r.query_id != id) continue;
      double speed = 1, ratio = 1;
      if (base && &r != base) {
        speed = base->median_ms > 0 ? r.median_ms / base->median_ms : 0;
        ratio = base->scanned > 0 ? static_cast<double>(r.scanned) / static_cast<double>(base->scanned) : 0;
      }
      std::snprintf(buf, sizeof buf, "%-8s %-10s %12.3f %12llu %8llu %8.1fx %9.1fx\n", r.query_id.c_str(),
                    std::string(to_string(r.scheduler)).c_str(), r.median_ms,
                    static_cast<unsigned long long>(r.scanned), static_cast<unsigned long long>(r.matched), speed,
                    ratio);
      out += buf;
    }
  }
  return out;
}

}  // namespace aiql
