// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/server.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "aiql/executor.hpp"
#include "aiql/parser.hpp"

namespace aiql {

namespace {

HttpReply json_reply(int status, const nlohmann::json& body) {
  return {status, "application/json", body.dump()};
}

HttpReply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"ok", false}, {"error", message}});
}

/// Parses a request body into an object with a non-empty string `query`.
std::variant<nlohmann::json, HttpReply> request_json(std::string_view body, std::size_t limit) {
  if (body.size() > limit) return error_reply(413, "request body exceeds " + std::to_string(limit) + " bytes");
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error_reply(400, "request body must be a JSON object");
  auto q = j.find("query");
  if (q == j.end() || !q->is_string() || q->get<std::string>().empty())
    return error_reply(400, "field 'query' must be a non-empty string");
  return j;
}

constexpr const char* kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>AIQL</title>
<style>
body{font-family:sans-serif;margin:1.5em}textarea{width:100%;height:12em;font-family:monospace}
table{border-collapse:collapse;margin-top:1em}td,th{border:1px solid #ccc;padding:2px 6px;font-family:monospace}
#status{color:#555;margin-top:.5em}.err{color:#b00}
</style></head><body>
<h3>AIQL console</h3>
<textarea id="q" spellcheck="false"></textarea><br>
<button id="run">Run</button> <span id="status"></span>
<pre id="diag" class="err"></pre><div id="out"></div>
<script>
const q=document.getElementById('q'),st=document.getElementById('status'),
      dg=document.getElementById('diag'),out=document.getElementById('out');
let rev=0;
q.addEventListener('input',()=>{const r=++rev;setTimeout(async()=>{if(r!==rev)return;
  const res=await fetch('/api/check',{method:'POST',body:JSON.stringify({query:q.value})});
  const j=await res.json();if(r!==rev)return;
  dg.textContent=(j.diagnostics||[]).map(d=>d.line+':'+d.col+' '+d.message).join('\n');},300);});
document.getElementById('run').onclick=async()=>{
  st.textContent='running...';out.innerHTML='';
  const res=await fetch('/api/query',{method:'POST',body:JSON.stringify({query:q.value})});
  const j=await res.json();
  if(!j.ok){st.textContent=j.error||'';dg.textContent=(j.diagnostics||[]).map(d=>d.line+':'+d.col+' '+d.message).join('\n');return;}
  dg.textContent='';
  st.textContent=j.table.rows.length+' rows, planning '+j.stats.planning_ms.toFixed(1)+' ms, execution '+j.stats.execution_ms.toFixed(1)+' ms';
  const t=document.createElement('table'),h=t.insertRow();
  j.table.columns.forEach(c=>{const th=document.createElement('th');th.textContent=c;h.appendChild(th);});
  j.table.rows.forEach(r=>{const tr=t.insertRow();r.forEach(v=>tr.insertCell().textContent=v);});
  out.appendChild(t);};
</script></body></html>
)";

}  // namespace

QueryService::QueryService(const EventStore& store, ServiceOptions options) : store_(store), options_(options) {}

HttpReply QueryService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  if (path == "/api/query") return method == "POST" ? query(body) : error_reply(405, "use POST");
  if (path == "/api/check") return method == "POST" ? check(body) : error_reply(405, "use POST");
  if (path == "/api/stats") return method == "GET" ? stats() : error_reply(405, "use GET");
  if (path == "/" || path == "/index.html") return method == "GET" ? index() : error_reply(405, "use GET");
  return error_reply(404, "no such endpoint");
}

HttpReply QueryService::query(std::string_view body) const {
  auto parsed = request_json(body, options_.max_body_bytes);
  if (auto* reply = std::get_if<HttpReply>(&parsed)) return *reply;
  const auto& req = std::get<nlohmann::json>(parsed);
  const std::string source = req["query"].get<std::string>();

  bool explain_only = false;
  std::size_t max_rows = options_.default_max_rows;
  if (auto opts = req.find("options"); opts != req.end()) {
    if (!opts->is_object()) return error_reply(400, "field 'options' must be an object");
    if (auto e = opts->find("explain_only"); e != opts->end()) {
      if (!e->is_boolean()) return error_reply(400, "options.explain_only must be a boolean");
      explain_only = e->get<bool>();
    }
    if (auto m = opts->find("max_rows"); m != opts->end()) {
      if (!m->is_number_unsigned()) return error_reply(400, "options.max_rows must be an unsigned integer");
      max_rows = m->get<std::size_t>();
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto result = parse(source);
  if (!result.ok()) return json_reply(200, {{"ok", false}, {"diagnostics", to_json(result.diagnostics)}});

  try {
    if (explain_only) {
      auto plan = plan_query(*result.ast, store_);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      ExecStats stats;
      stats.planning_ms = ms;
      for (std::size_t i = 0; i < plan.queries.size(); ++i)
        stats.per_pattern.push_back({plan.queries[i].alias, plan.estimates[i], 0, 0});
      return json_reply(200, {{"ok", true}, {"plan", to_json(plan)}, {"stats", to_json(stats)}});
    }
    ExecOptions opts;
    opts.max_rows = max_rows;
    opts.workers = options_.workers;
    opts.deadline = t0 + options_.timeout;
    ResultTable table = execute_ast(*result.ast, store_, opts);
    auto j = to_json(table);
    nlohmann::json stats = std::move(j["stats"]);
    j.erase("stats");
    return json_reply(200, {{"ok", true}, {"table", std::move(j)}, {"stats", std::move(stats)}});
  } catch (const QueryTimeout& e) {
    return json_reply(504, {{"ok", false},
                            {"timeout", true},
                            {"limit_ms", options_.timeout.count()},
                            {"error", e.what()}});
  } catch (const Error& e) {
    return error_reply(500, e.what());
  }
}

HttpReply QueryService::check(std::string_view body) const {
  auto parsed = request_json(body, options_.max_body_bytes);
  if (auto* reply = std::get_if<HttpReply>(&parsed)) return *reply;
  const auto& req = std::get<nlohmann::json>(parsed);
  return json_reply(200, {{"diagnostics", to_json(aiql::check(req["query"].get<std::string>()))}});
}

HttpReply QueryService::stats() const {
  const StoreStats s = store_.stats_snapshot();
  nlohmann::json by_kind = nlohmann::json::object();
  for (std::size_t k = 0; k < kEntityKindCount; ++k)
    by_kind[std::string(to_string(static_cast<EntityKind>(k)))] = s.entities_by_kind[k];
  nlohmann::json by_type = nlohmann::json::object();
  for (std::size_t k = 0; k < kEntityKindCount; ++k)
    by_type[std::string(to_string(static_cast<EventType>(k)))] = s.events_by_type[k];
  return json_reply(200, {{"events", s.events},
                          {"entities", s.entities},
                          {"partitions", s.partitions},
                          {"entities_by_kind", by_kind},
                          {"events_by_type", by_type}});
}

HttpReply QueryService::index() const { return {200, "text/html; charset=utf-8", kIndexPage}; }

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(const QueryService& service, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  // One spare byte so oversize bodies reach the service's own 413 check.
  srv.set_payload_max_length(service.options().max_body_bytes + 1);
  srv.set_read_timeout(std::chrono::seconds(30));
  srv.set_write_timeout(std::chrono::seconds(30));
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpReply reply = service.handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  srv.Post("/api/query", forward);
  srv.Post("/api/check", forward);
  srv.Get("/api/stats", forward);
  if (ui_dir) {
    srv.set_mount_point("/", ui_dir->string());
  } else {
    srv.Get("/", forward);
  }
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string msg = res.status == 413 ? "request body too large" : httplib::status_message(res.status);
    res.set_content(nlohmann::json{{"ok", false}, {"error", msg}}.dump(), "application/json");
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"ok", false}, {"error", msg}}.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace aiql
