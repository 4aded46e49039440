// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. `--only N` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "aiql/bench.hpp"
#include "aiql/executor.hpp"
#include "aiql/ingest.hpp"
#include "aiql/parser.hpp"
#include "support/investigation_queries.hpp"
#include "support/query_oracle.hpp"
#include "support/random_store.hpp"

namespace aiql {
namespace {

namespace fs = std::filesystem;
using testing::Universe;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Thrown by `require` so a criterion stops at its first broken expectation.
struct Unmet {
  std::string what;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Unmet{what};
}

std::vector<std::vector<std::string>> text_rows(const ResultTable& t) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : t.rows) {
    std::vector<std::string> r;
    for (const auto& c : row) r.push_back(cell_to_string(c));
    out.push_back(std::move(r));
  }
  return out;
}

QueryAst must_parse(std::string_view text) {
  auto r = parse(text);
  require(r.ok(), "query does not parse: " + (r.diagnostics.empty() ? std::string() : r.diagnostics[0].message) +
                      "\n" + std::string(text));
  return *r.ast;
}

ResultTable run(const EventStore& store, std::string_view text, ExecOptions opts = {}) {
  return execute_ast(must_parse(text), store, opts);
}

std::string show(const std::vector<std::vector<std::string>>& rows) {
  std::string s = "[";
  for (const auto& r : rows) {
    s += "(";
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? ", " : "") + r[i];
    s += ")";
  }
  return s + "]";
}

// --- 1 ----------------------------------------------------------------------

Outcome language_coverage() {
  const QueryAst exfil = must_parse(testdata::kExfiltrationQuery);
  require(exfil.kind == QueryKind::Multievent, "exfiltration query is not multievent");
  require(exfil.patterns.size() == 4, "exfiltration query: expected 4 patterns");
  require(exfil.constraints.size() == 3, "exfiltration query: expected 3 constraints");
  for (const auto& c : exfil.constraints) require(c.relation == TemporalRelation::Before, "non-before constraint");

  const QueryAst ram = must_parse(testdata::kRamificationQuery);
  require(ram.kind == QueryKind::Dependency && ram.path, "ramification query is not a dependency query");
  require(ram.path->edges.size() == 3, "ramification query: expected 3 edges");
  const QueryAst compiled = compile_dependency(ram);
  require(compiled.patterns.size() == 3, "ramification query: expected 3 compiled patterns, got " +
                                             std::to_string(compiled.patterns.size()));
  require(compiled.constraints.size() == 2, "ramification query: expected 2 compiled constraints, got " +
                                                std::to_string(compiled.constraints.size()));
  for (const auto& c : compiled.constraints)
    require(c.relation == TemporalRelation::Before, "compiled constraint is not before");
  EventStore empty;
  const ExecutionPlan plan = plan_query(ram, empty);
  require(plan.queries.size() == 3 && plan.before.size() == 2, "ramification plan shape");

  const QueryAst spike = must_parse(testdata::kSpikeQuery);
  require(spike.kind == QueryKind::Anomaly && spike.anomaly, "spike query is not an anomaly query");
  const AnomalyClause& a = *spike.anomaly;
  require(a.window_ms == 60'000 && a.step_ms == 10'000, "spike query: window/step");
  std::size_t aggregates = 0;
  for (const auto& item : spike.ret.items)
    if (item.kind == ReturnItem::Kind::Aggregate) {
      ++aggregates;
      require(item.fn == AggregateFn::Avg, "spike query: aggregate is not avg");
    }
  require(aggregates == 1, "spike query: expected one aggregate");
  require(a.group_by == std::vector<std::string>{"p"}, "spike query: group by");
  require(a.having.has_value(), "spike query: no having clause");
  std::set<std::uint32_t> history;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (e.kind == Expr::Kind::Ref && e.history > 0) history.insert(e.history);
    for (const auto& op : e.operands) walk(op);
  };
  walk(*a.having);
  require(history == std::set<std::uint32_t>{1, 2}, "spike query: history indexes");
  return {true, "4 patterns + 3 before; 3 edges -> 3 patterns + 2 before; 60 s/10 s avg, history {1,2}"};
}

// --- 2 ----------------------------------------------------------------------

Outcome oracle_equivalence() {
  testing::RandomStoreConfig cfg;
  cfg.events = 200;
  cfg.agents = 2;
  std::size_t compared = 0, nonempty = 0, skipped = 0;
  for (std::uint64_t seed = 1; compared < 500; ++seed) {
    auto rs = testing::make_random_store(cfg, 9000 + seed);
    Universe u(rs.store);
    testing::QueryFuzzer fuzz(seed * 977, cfg);
    for (int i = 0; i < 20; ++i) {
      QueryAst ast = fuzz.multievent(4);
      auto want = testing::oracle_multievent(ast, u);
      if (want.overflow) {
        ++skipped;
        continue;
      }
      for (auto sched : {Scheduler::Optimized, Scheduler::Textual, Scheduler::Reversed}) {
        ExecOptions opts;
        opts.scheduler = sched;
        auto got = execute_ast(ast, rs.store, opts);
        require(text_rows(got) == want.rows && got.row_events == want.row_events,
                "mismatch (seed " + std::to_string(seed) + ", " + std::string(to_string(sched)) + ")\n" +
                    format_ast(ast));
      }
      ++compared;
      if (!want.rows.empty()) ++nonempty;
    }
  }
  return {true, std::to_string(compared) + " cases x 3 schedulers, " + std::to_string(nonempty) + " non-empty, " +
                    std::to_string(skipped) + " skipped"};
}

// --- 3 ----------------------------------------------------------------------

Outcome dependency_soundness() {
  testing::RandomStoreConfig cfg;
  cfg.events = 200;
  cfg.agents = 2;
  std::size_t paths = 0, nonempty = 0, forward = 0;
  for (std::uint64_t seed = 1; paths < 200; ++seed) {
    auto rs = testing::make_random_store(cfg, 7000 + seed);
    Universe u(rs.store);
    testing::QueryFuzzer fuzz(seed * 613, cfg);
    for (int i = 0; i < 20; ++i) {
      QueryAst ast = fuzz.dependency(4);
      auto want = testing::oracle_path(ast, u);
      auto got = execute_ast(ast, rs.store);
      require(text_rows(got) == want.rows && got.row_events == want.row_events,
              "mismatch (seed " + std::to_string(seed) + ")\n" + format_ast(ast));
      ++paths;
      if (ast.path->direction == Direction::Forward) ++forward;
      if (!want.rows.empty()) ++nonempty;
    }
  }
  return {true, std::to_string(paths) + " paths (" + std::to_string(forward) + " forward), " +
                    std::to_string(nonempty) + " non-empty"};
}

// --- 4 ----------------------------------------------------------------------

Outcome anomaly_soundness() {
  std::size_t flagged = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EventStore store;
    AnomalyStreamConfig cfg;
    cfg.rng_seed = seed;
    const AnomalyManifest m = synthesize_anomaly_stream(cfg, store);
    const QueryAst ast = must_parse(testdata::kSpikeQuery);
    const ResultTable out = execute_ast(ast, store);

    std::set<std::pair<std::string, Timestamp>> got, manifest, oracle;
    for (const auto& row : out.rows) got.insert({cell_to_string(row.front()), std::get<std::int64_t>(row.back())});
    for (Timestamp w : m.window_starts) manifest.insert({m.exe_name, w});
    Universe u(store);
    for (const auto& f : testing::oracle_spike_windows(ast, u)) {
      require(f.key.size() == 1, "oracle flag without a single group key");
      oracle.insert({testing::oracle_entity_cell(u.entity(f.key[0]), "exe_name"), f.window_start});
    }
    require(got == manifest, "seed " + std::to_string(seed) + ": flags differ from manifest");
    require(oracle == manifest, "seed " + std::to_string(seed) + ": brute-force windows differ from manifest");
    flagged += got.size();
  }
  return {true, "5 seeds, " + std::to_string(flagged) + " flagged windows, no false positives or negatives"};
}

// --- 5 ----------------------------------------------------------------------

constexpr const char* kDay = "(at \"04/12/2018\")\n";

std::set<EventId> row_event_set(const ResultTable& t) {
  std::set<EventId> s;
  for (const auto& r : t.row_events) s.insert(r.begin(), r.end());
  return s;
}

Outcome end_to_end() {
  EventStore store;
  ScenarioConfig cfg;
  cfg.noise_events_per_agent = 20'000;
  cfg.rng_seed = 7;
  const AptManifest m = synthesize_apt(cfg, store);
  const auto total = store.stats_snapshot().events;
  require(total >= 100'000, "store too small");
  const std::string db = "agentid = " + std::to_string(m.db_agent) + "\n";
  using Rows = std::vector<std::vector<std::string>>;

  // Anomaly query: which process suddenly sends much more to the attacker?
  auto spike = run(store, testdata::kSpikeQuery);
  require(spike.rows.size() == 1, "spike query returned " + std::to_string(spike.rows.size()) + " rows");
  require(cell_to_string(spike.rows[0][0]) == "sbblv.exe", "spike query flagged " + cell_to_string(spike.rows[0][0]));
  require(std::get<std::int64_t>(spike.rows[0].back()) == m.burst_window_start, "spike window start");

  // Files it read.
  auto files = run(store, kDay + db + "proc p[\"sbblv.exe\"] read file f as e\nreturn distinct f");
  require(text_rows(files) == Rows{{"D:\\backup\\backup1.dmp"}}, "files read by sbblv.exe: " + show(text_rows(files)));

  // Who created the dump, and who started that process.
  auto writer = run(store, kDay + db + "proc p write file f[\"%backup1.dmp\"] as e\nreturn distinct p");
  require(text_rows(writer) == Rows{{"osql.exe"}}, "writer of backup1.dmp: " + show(text_rows(writer)));
  auto starter = run(store, kDay + db + "proc p start proc q[\"osql.exe\"] as e\nreturn distinct p");
  require(text_rows(starter) == Rows{{"cmd.exe"}}, "starter of osql.exe: " + show(text_rows(starter)));

  // Where the implant connected before sending the dump.
  auto dest = run(store, kDay + db +
                             "proc p[\"sbblv.exe\"] connect ip i as e1\n"
                             "proc p read file f[\"%backup1.dmp\"] as e2\n"
                             "proc p write ip i as e3\n"
                             "with e1 before e2, e2 before e3\n"
                             "return distinct i");
  require(text_rows(dest) == Rows{{m.attacker_ip}}, "exfiltration destination: " + show(text_rows(dest)));

  // The whole chain.
  auto chain = run(store, testdata::kExfiltrationQuery);
  const Rows want_chain = {{"cmd.exe", "osql.exe", "osql.exe", "D:\\backup\\backup1.dmp", "sbblv.exe", m.attacker_ip}};
  require(text_rows(chain) == want_chain, "exfiltration chain: " + show(text_rows(chain)));
  const auto& a5 = m.steps.at("a5");
  const std::set<EventId> a5_set(a5.begin(), a5.end());
  for (EventId id : row_event_set(chain)) require(a5_set.count(id), "chain event outside a5");

  // Earlier steps: every event of each step, and nothing else.
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"a1",
       "proc p1[\"%unrealircd\"] accept ip i1[dstip=\"203.0.113.129\"] as e1\n"
       "proc p1 start proc p2[\"/bin/sh\"] as e2\n"
       "proc p2 connect ip i2[dstip=\"203.0.113.129\"] as e3\n"
       "with e1 before e2, e2 before e3\n"
       "return p1, p2, i2"},
      {"a2",
       "proc p1[\"/bin/sh\"] read ip i1[dstip=\"203.0.113.129\"] as e1\n"
       "proc p1 write file f1[\"%info_stealer.exe\"] as e2\n"
       "proc p2[\"%apache2\"] read file f1 as e3\n"
       "proc p2 connect proc p3[agentid = " +
           std::to_string(m.intranet_agent) +
           "] as e4\n"
           "proc p3 write file f2[\"%info_stealer.exe\"] as e5\n"
           "with e1 before e2, e2 before e3, e3 before e4, e4 before e5\n"
           "return p1, f1, p2, p3, f2"},
      {"a3",
       "proc p1[\"iexplore.exe\"] start proc p2[\"info_stealer.exe\"] as e1\n"
       "proc p2 connect proc p3[\"explorer.exe\"] as e2\n"
       "proc p3 start proc p4[\"mimikatz.exe\"] as e3\n"
       "proc p4 write file f1 as e4\n"
       "proc p3 start proc p5[\"kiwi.exe\"] as e5\n"
       "proc p5 write file f2 as e6\n"
       "with e1 before e2, e2 before e3, e3 before e4, e2 before e5, e5 before e6\n"
       "return p2, p3, p4, f1, p5, f2"},
      {"a4",
       "proc p1[\"explorer.exe\"] connect proc p2[\"psexesvc.exe\"] as e1\n"
       "proc p2 start proc p3[\"pwdump7.exe\"] as e2\n"
       "proc p3 write file f1 as e3\n"
       "proc p2 start proc p4[\"wce.exe\"] as e4\n"
       "proc p4 write file f2 as e5\n"
       "with e1 before e2, e2 before e3, e1 before e4, e4 before e5\n"
       "return p1, p2, p3, f1, p4, f2"},
  };
  for (const auto& [step, body] : steps) {
    auto t = run(store, kDay + body);
    const auto& ids = m.steps.at(step);
    require(row_event_set(t) == std::set<EventId>(ids.begin(), ids.end()),
            step + ": recovered events differ from the manifest (" + std::to_string(t.rows.size()) + " rows)");
  }
  return {true, std::to_string(total) + " events; a5 chain and a1-a4 recovered exactly"};
}

// --- 6 ----------------------------------------------------------------------

Outcome scheduling_benefit() {
  EventStore store;
  ScenarioConfig cfg;
  cfg.noise_events_per_agent = 200'000;
  cfg.rng_seed = 11;
  synthesize_apt(cfg, store);
  const auto total = store.stats_snapshot().events;
  require(total >= 1'000'000, "store has " + std::to_string(total) + " events");

  const auto suite = scheduling_suite(store, 20, 1e-4, 5);
  require(suite.size() == 20, "suite has " + std::to_string(suite.size()) + " queries");
  BenchOptions opts;
  opts.schedulers = {Scheduler::Optimized, Scheduler::Textual};
  opts.repetitions = 5;
  const BenchReport report = run_bench(store, suite, opts);  // throws ResultMismatch if the gate fails

  std::size_t tenfold = 0;
  std::vector<double> speedups;
  for (const auto& q : suite) {
    const BenchRow* opt = report.find(q.id, Scheduler::Optimized);
    const BenchRow* txt = report.find(q.id, Scheduler::Textual);
    require(opt && txt, "missing bench row for " + q.id);
    if (txt->scanned >= 10 * opt->scanned) ++tenfold;
    speedups.push_back(opt->median_ms > 0 ? txt->median_ms / opt->median_ms : 0);
  }
  std::sort(speedups.begin(), speedups.end());
  const double median = (speedups[9] + speedups[10]) / 2;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu events; %zu/20 queries scan >=10x fewer; median speedup %.1fx; gate passed",
                static_cast<unsigned long long>(total), tenfold, median);
  return {tenfold >= 16 && median >= 2.0, buf};
}

// --- 7 ----------------------------------------------------------------------

Outcome partition_equivalence() {
  testing::RandomStoreConfig cfg;
  cfg.events = 3000;
  cfg.agents = 4;
  cfg.days = 3;
  cfg.processes_per_agent = 10;
  auto rs = testing::make_random_store(cfg, 4242);
  const auto partitions = rs.store.partitions().size();
  require(partitions == 12, "store has " + std::to_string(partitions) + " partitions");
  testing::QueryFuzzer fuzz(4243, cfg);
  std::size_t nonempty = 0;
  for (int i = 0; i < 50; ++i) {
    QueryAst ast = i % 5 == 4 ? fuzz.dependency(3) : fuzz.multievent(4);
    ExecOptions on;
    on.workers = 4;
    ExecOptions off;
    off.partitioned = false;
    auto a = execute_ast(ast, rs.store, on);
    auto b = execute_ast(ast, rs.store, off);
    require(text_rows(a) == text_rows(b) && a.row_events == b.row_events,
            "query " + std::to_string(i) + " differs\n" + format_ast(ast));
    if (!a.rows.empty()) ++nonempty;
  }
  return {true, "50 queries over " + std::to_string(partitions) + " partitions, " + std::to_string(nonempty) +
                    " non-empty"};
}

// --- 8 ----------------------------------------------------------------------

Outcome store_properties() {
  // Dedup idempotence: re-upserting any identity returns the same id and adds nothing.
  std::size_t upserts = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rs = testing::make_random_store({}, seed);
    const auto before = rs.store.stats_snapshot();
    for (const auto& e : rs.store.all_entities()) {
      require(rs.store.upsert_entity(e.agent_id, e.kind, e.attrs) == e.id, "re-upsert changed an id");
      ++upserts;
    }
    require(rs.store.stats_snapshot() == before, "re-upsert changed the store");
  }

  // Batch atomicity: a bad draft in the middle of a batch commits nothing, in memory and on disk.
  const fs::path dir = fs::temp_directory_path() / ("aiql-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  std::size_t injected = 0;
  {
    auto store = EventStore::open(dir);
    auto p = store.upsert_entity(1, EntityKind::Process, {{"pid", 1}, {"exe_name", std::string("a.exe")}});
    auto f = store.upsert_entity(1, EntityKind::File, {{"name", std::string("x")}});
    std::uint64_t seq = 0;
    const Timestamp t0 = 1'523'491'200'000;
    std::mt19937_64 rng(3);
    for (int round = 0; round < 20; ++round) {
      std::vector<EventDraft> batch;
      for (int i = 0; i < 50; ++i)
        batch.push_back({1, p, Operation::Write, f, t0 + round * 1000 + i, t0 + round * 1000 + i, ++seq, 1});
      if (round % 2 == 1) {
        auto& victim = batch[10 + rng() % 30];
        if (rng() % 2)
          victim.object_id = 999'999;
        else
          victim.subject_id = f;  // a file cannot act
        const auto snap = store.stats_snapshot();
        const auto events = store.all_events();
        bool threw = false;
        try {
          store.append_batch(batch);
        } catch (const Error&) {
          threw = true;
        }
        require(threw, "injected failure was accepted");
        require(store.stats_snapshot() == snap && store.all_events() == events, "failed batch left events behind");
        seq -= 50;
        ++injected;
        continue;
      }
      store.append_batch(batch);
    }
    store.flush();
    require(store.stats_snapshot().events == 500, "expected 500 committed events");
  }
  {
    auto reopened = EventStore::open(dir, true);
    require(reopened.stats_snapshot().events == 500, "reopened store does not hold exactly the committed batches");
  }
  fs::remove_all(dir);

  // Scan equals a naive filter.
  std::size_t scans = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::RandomStoreConfig cfg;
    cfg.events = 1000 + seed * 300;
    cfg.agents = 1 + seed % 3;
    cfg.days = 1 + static_cast<int>(seed % 2);
    auto rs = testing::make_random_store(cfg, 100 + seed);
    Universe u(rs.store);
    std::mt19937_64 rng(seed * 17 + 5);
    for (int q = 0; q < 50; ++q) {
      auto pred = testing::random_scan_predicate(rng, cfg);
      require(rs.store.scan(pred) == testing::oracle_scan(pred, u), "scan differs from filter (seed " +
                                                                         std::to_string(seed) + ")");
      ++scans;
    }
  }
  return {true, std::to_string(upserts) + " re-upserts, " + std::to_string(injected) + " injected failures, " +
                    std::to_string(scans) + " scans vs filter"};
}

struct Criterion {
  int number;
  const char* name;
  double limit_s;
  Outcome (*fn)();
};

}  // namespace
}  // namespace aiql

int main(int argc, char** argv) {
  using namespace aiql;
  const Criterion criteria[] = {
      {1, "language coverage", 1, language_coverage},
      {2, "oracle equivalence", 300, oracle_equivalence},
      {3, "dependency rewrite soundness", 120, dependency_soundness},
      {4, "anomaly soundness", 30, anomaly_soundness},
      {5, "end-to-end investigation", 120, end_to_end},
      {6, "scheduling benefit", 600, scheduling_benefit},
      {7, "partitioned execution equivalence", 120, partition_equivalence},
      {8, "store properties", 60, store_properties},
  };
  int only = 0;
  if (argc == 3 && std::string(argv[1]) == "--only") only = std::atoi(argv[2]);

  int failed = 0;
  for (const auto& c : criteria) {
    if (only && c.number != only) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const Unmet& u) {
      out = {false, u.what};
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs >= c.limit_s) {
      out.pass = false;
      out.detail += "; over the time limit";
    }
    if (!out.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2f s, limit %.0f s]\n", out.pass ? "PASS" : "FAIL", c.number, c.name,
                out.detail.c_str(), secs, c.limit_s);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
