// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "aiql/bench.hpp"
#include "aiql/executor.hpp"
#include "aiql/ingest.hpp"
#include "aiql/parser.hpp"
#include "aiql/server.hpp"

namespace aiql {

namespace {

namespace fs = std::filesystem;

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

/// A usage or environment problem detected by a verb.
class ConfigError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !(f << content)) throw IoError("cannot write " + path.string());
}

void print_diagnostics(std::ostream& err, const std::vector<Diagnostic>& diags, std::string_view source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= source.size(); ++i) {
    if (i == source.size() || source[i] == '\n') {
      lines.push_back(source.substr(start, i - start));
      start = i + 1;
    }
  }
  for (const auto& d : diags) {
    err << d.line << ":" << d.column << ": " << (d.severity == Severity::Error ? "error" : "warning") << ": "
        << d.message << "\n";
    if (d.line >= 1 && d.line <= lines.size()) {
      err << "  " << lines[d.line - 1] << "\n  " << std::string(d.column > 0 ? d.column - 1 : 0, ' ')
          << std::string(std::max<std::uint32_t>(1, d.length), '^') << "\n";
    }
  }
}

struct QueryArgs {
  std::string text;
  std::string file;
  std::string format = "text";
  std::string scheduler = "optimized";
  std::size_t max_rows = 0;
  long timeout_ms = 0;
  bool no_partition = false;
  unsigned workers = 0;
};

std::string query_source(const QueryArgs& a, std::istream& in) {
  if (!a.text.empty()) return a.text;
  if (a.file == "-") return std::string(std::istreambuf_iterator<char>(in), {});
  if (!a.file.empty()) return read_file(a.file);
  throw ConfigError("give a query with -e <text> or -f <file>");
}

ExecOptions exec_options(const QueryArgs& a) {
  ExecOptions opts;
  auto s = parse_scheduler(a.scheduler);
  if (!s) throw ConfigError("unknown scheduler '" + a.scheduler + "' (optimized, textual, reversed)");
  opts.scheduler = *s;
  opts.partitioned = !a.no_partition;
  opts.workers = a.workers;
  if (a.max_rows) opts.max_rows = a.max_rows;
  if (a.timeout_ms > 0) opts.deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(a.timeout_ms);
  return opts;
}

int run_query(const EventStore& store, const std::string& source, const QueryArgs& a, Streams io) {
  auto outcome = execute(source, store, exec_options(a));
  if (!outcome.ok()) {
    print_diagnostics(io.err, outcome.diagnostics, source);
    return kExitDiagnostics;
  }
  if (a.format == "json") {
    io.out << to_json(*outcome.table).dump(2) << "\n";
  } else {
    io.out << to_text(*outcome.table);
  }
  return kExitOk;
}

int cmd_query(const std::string& store_dir, const QueryArgs& a, Streams io) {
  const std::string source = query_source(a, io.in);
  auto store = EventStore::open(store_dir, true);
  return run_query(store, source, a, io);
}

int cmd_explain(const std::string& store_dir, const QueryArgs& a, Streams io) {
  const std::string source = query_source(a, io.in);
  auto parsed = parse(source);
  if (!parsed.ok()) {
    print_diagnostics(io.err, parsed.diagnostics, source);
    return kExitDiagnostics;
  }
  auto store = EventStore::open(store_dir, true);
  auto s = parse_scheduler(a.scheduler);
  if (!s) throw ConfigError("unknown scheduler '" + a.scheduler + "'");
  auto plan = plan_query(*parsed.ast, store, *s);
  auto j = to_json(plan);
  j["canonical"] = format_ast(*parsed.ast);
  io.out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_ingest(const std::string& store_dir, const std::vector<std::string>& files, std::size_t batch, Streams io) {
  auto store = EventStore::open(store_dir);
  IngestOptions opts;
  opts.batch_size = batch;
  std::size_t committed = 0, rejected = 0;
  for (const auto& f : files) {
    IngestReport r = f == "-" ? ingest_stream(io.in, store, opts) : ingest_file(f, store, opts);
    committed += r.committed;
    rejected += r.rejected.size();
    constexpr std::size_t kShown = 20;
    for (std::size_t i = 0; i < r.rejected.size() && i < kShown; ++i)
      io.err << f << ":" << r.rejected[i].line << ": " << r.rejected[i].reason << "\n";
    if (r.rejected.size() > kShown) io.err << f << ": ... " << r.rejected.size() - kShown << " more rejected lines\n";
  }
  store.flush();
  io.out << "committed " << committed << " events, rejected " << rejected << " lines\n";
  return rejected ? kExitDiagnostics : kExitOk;
}

struct SynthArgs {
  std::uint64_t seed = 1;
  std::uint64_t noise = 2000;
  std::string manifest;
  unsigned steps = 180;
  std::uint64_t burst = 1000;
  unsigned benign = 3;
};

int cmd_synth(const std::string& store_dir, const std::string& scenario, const SynthArgs& a, Streams io) {
  auto store = EventStore::open(store_dir);
  nlohmann::json manifest;
  if (scenario == "apt") {
    ScenarioConfig cfg;
    cfg.rng_seed = a.seed;
    cfg.noise_events_per_agent = a.noise;
    manifest = to_json(synthesize_apt(cfg, store));
  } else {
    AnomalyStreamConfig cfg;
    cfg.rng_seed = a.seed;
    cfg.steps = a.steps;
    cfg.burst_amount = a.burst;
    cfg.benign_processes = a.benign;
    manifest = to_json(synthesize_anomaly_stream(cfg, store));
  }
  store.flush();
  const fs::path path = a.manifest.empty() ? fs::path(store_dir) / (scenario + "-manifest.json") : fs::path(a.manifest);
  write_file(path, manifest.dump(2) + "\n");
  const auto stats = store.stats_snapshot();
  io.out << "store now holds " << stats.events << " events and " << stats.entities << " entities; manifest written to "
         << path.string() << "\n";
  return kExitOk;
}

int cmd_repl(const std::string& store_dir, const QueryArgs& a, Streams io) {
  auto store = EventStore::open(store_dir, true);
  const fs::path history = fs::path(store_dir) / ".history";
  io.out << "AIQL shell. End a query with a blank line or ';'. :help for commands.\n";
  std::string buffer, line;
  int last = kExitOk;
  while (true) {
    io.out << (buffer.empty() ? "aiql> " : " ...> ") << std::flush;
    if (!std::getline(io.in, line)) {
      if (buffer.find_first_not_of(" \t\r\n") == std::string::npos) break;
      line.clear();
    }
    if (buffer.empty() && !line.empty() && line[0] == ':') {
      if (line == ":quit" || line == ":q") break;
      if (line == ":history") {
        std::ifstream h(history);
        std::string entry;
        for (int n = 1; std::getline(h, entry); ++n) io.out << n << "  " << entry << "\n";
      } else {
        io.out << ":quit  leave the shell\n:history  list earlier queries\n";
      }
      continue;
    }
    bool run = line.find_first_not_of(" \t\r") == std::string::npos;
    if (!run && line.back() == ';') {
      line.pop_back();
      run = true;
    }
    if (!line.empty()) buffer += (buffer.empty() ? "" : "\n") + line;
    if (!run || buffer.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    try {
      last = run_query(store, buffer, a, io);
    } catch (const QueryTimeout& e) {
      io.err << "error: " << e.what() << "\n";
      last = kExitDiagnostics;
    }
    std::string flat = buffer;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::ofstream(history, std::ios::app) << flat << "\n";
    buffer.clear();
  }
  io.out << "\n";
  return last;
}

struct BenchArgs {
  std::size_t queries = 20;
  unsigned reps = 5;
  double selectivity = 1e-4;
  std::uint64_t seed = 1;
  std::string csv;
  unsigned workers = 0;
};

int cmd_bench(const std::string& store_dir, const BenchArgs& a, Streams io) {
  auto store = EventStore::open(store_dir, true);
  auto suite = scheduling_suite(store, a.queries, a.selectivity, a.seed);
  if (suite.empty()) throw ConfigError("store has no destination address rare enough for the suite");
  BenchOptions opts;
  opts.repetitions = a.reps;
  opts.workers = a.workers;
  auto report = run_bench(store, suite, opts);
  if (a.csv == "-") {
    io.out << to_csv(report);
    return kExitOk;
  }
  io.out << to_text(report);
  if (!a.csv.empty()) write_file(a.csv, to_csv(report));
  return kExitOk;
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (HttpServer* s = g_server.load()) s->stop();
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  long timeout_ms = 120'000;
  std::string ui_dir;
};

int cmd_serve(const std::string& store_dir, const ServeArgs& a, Streams io) {
  auto store = EventStore::open(store_dir, true);
  ServiceOptions opts;
  opts.timeout = std::chrono::milliseconds(a.timeout_ms);
  QueryService service(store, opts);
  std::optional<fs::path> ui;
  if (!a.ui_dir.empty()) ui = a.ui_dir;
  HttpServer server(service, ui);
  const int port = server.bind(a.host, a.port);
  io.out << "serving " << store_dir << " on http://" << a.host << ":" << port << "/\n" << std::flush;
  g_server = &server;
  auto prev_int = std::signal(SIGINT, stop_server);
  auto prev_term = std::signal(SIGTERM, stop_server);
  server.listen();
  std::signal(SIGINT, prev_int);
  std::signal(SIGTERM, prev_term);
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Streams io{in, out, err};
  CLI::App app{"AIQL attack investigation toolkit", "aiql"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every verb");

  std::string store_dir;
  auto store_opt = [&](CLI::App* sub) {
    sub->add_option("--store", store_dir, "Store directory")->required()->envname("AIQL_STORE");
  };
  auto query_opts = [](CLI::App* sub, QueryArgs& q) {
    auto* e = sub->add_option("-e,--expr", q.text, "Query text");
    auto* f = sub->add_option("-f,--file", q.file, "Query file ('-' for stdin)");
    e->excludes(f);
    sub->add_option("--scheduler", q.scheduler, "optimized, textual or reversed")->capture_default_str();
  };

  QueryArgs q;
  auto* query = app.add_subcommand("query", "Run one query and print the result table");
  store_opt(query);
  query_opts(query, q);
  query->add_option("--format", q.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  query->add_option("--max-rows", q.max_rows, "Stop after this many rows");
  query->add_option("--timeout-ms", q.timeout_ms, "Abort after this long");
  query->add_flag("--no-partition", q.no_partition, "Scan sequentially and never split per agent");
  query->add_option("--workers", q.workers, "Scan threads (0: one per core)");

  QueryArgs ex;
  auto* explain = app.add_subcommand("explain", "Print the execution plan as JSON");
  store_opt(explain);
  query_opts(explain, ex);

  QueryArgs rq;
  auto* repl = app.add_subcommand("repl", "Interactive shell; history kept in <store>/.history");
  store_opt(repl);
  repl->add_option("--format", rq.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  repl->add_option("--scheduler", rq.scheduler, "optimized, textual or reversed");

  std::vector<std::string> files;
  std::size_t batch = 1000;
  auto* ingest = app.add_subcommand("ingest", "Load JSON-lines raw records");
  store_opt(ingest);
  ingest->add_option("files", files, "Input files ('-' for stdin)")->required();
  ingest->add_option("--batch", batch, "Events per atomic batch")->capture_default_str();

  SynthArgs sa;
  std::string scenario;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario into the store");
  store_opt(synth);
  synth->add_option("scenario", scenario, "apt or anomaly")->required()->check(CLI::IsMember({"apt", "anomaly"}));
  synth->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  synth->add_option("--noise", sa.noise, "apt: background events per host")->capture_default_str();
  synth->add_option("--steps", sa.steps, "anomaly: stream length in steps")->capture_default_str();
  synth->add_option("--burst", sa.burst, "anomaly: size of the planted transfer")->capture_default_str();
  synth->add_option("--benign", sa.benign, "anomaly: flat-rate processes")->capture_default_str();
  synth->add_option("--manifest", sa.manifest, "Manifest path (default <store>/<scenario>-manifest.json)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Compare schedulers on rare-address investigation queries");
  store_opt(bench);
  bench->add_option("--queries", ba.queries, "Suite size")->capture_default_str();
  bench->add_option("--reps", ba.reps, "Runs per scheduler, first one untimed")->capture_default_str();
  bench->add_option("--selectivity", ba.selectivity, "Largest share of events for the rare pattern")
      ->capture_default_str();
  bench->add_option("--seed", ba.seed, "Suite selection seed")->capture_default_str();
  bench->add_option("--csv", ba.csv, "Write CSV here ('-' for stdout)");
  bench->add_option("--workers", ba.workers, "Scan threads (0: one per core)");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "HTTP API and console page");
  store_opt(serve);
  serve->add_option("--port", sv.port, "TCP port (0: any free port)")->capture_default_str();
  serve->add_option("--host", sv.host, "Address to bind")->capture_default_str();
  serve->add_option("--timeout-ms", sv.timeout_ms, "Per-request query limit")->capture_default_str();
  serve->add_option("--ui", sv.ui_dir, "Serve static files from this directory at /");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kExitIoError;
  }

  try {
    if (query->parsed()) return cmd_query(store_dir, q, io);
    if (explain->parsed()) return cmd_explain(store_dir, ex, io);
    if (repl->parsed()) return cmd_repl(store_dir, rq, io);
    if (ingest->parsed()) return cmd_ingest(store_dir, files, batch, io);
    if (synth->parsed()) return cmd_synth(store_dir, scenario, sa, io);
    if (bench->parsed()) return cmd_bench(store_dir, ba, io);
    if (serve->parsed()) return cmd_serve(store_dir, sv, io);
  } catch (const QueryTimeout& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiagnostics;
  } catch (const ResultMismatch& e) {
    err << "error: schedulers disagree, no timings reported: " << e.what() << "\n";
    return kExitDiagnostics;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIoError;
  }
  return kExitIoError;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cin, std::cout, std::cerr);
}

}  // namespace aiql
