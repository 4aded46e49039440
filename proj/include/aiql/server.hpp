// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "aiql/event_store.hpp"

namespace aiql {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ServiceOptions {
  std::chrono::milliseconds timeout{120'000};
  std::size_t max_body_bytes = 1 << 20;
  std::size_t default_max_rows = 10'000;
  unsigned workers = 0;
};

/// The JSON API behind `serve`, independent of any socket:
///   POST /api/query  {query, options: {explain_only, max_rows}}
///   POST /api/check  {query} -> {diagnostics}
///   GET  /api/stats
///   GET  /           console page
class QueryService {
 public:
  explicit QueryService(const EventStore& store, ServiceOptions options = {});

  HttpReply handle(std::string_view method, std::string_view path, std::string_view body) const;

  HttpReply query(std::string_view body) const;
  HttpReply check(std::string_view body) const;
  HttpReply stats() const;
  HttpReply index() const;

  const ServiceOptions& options() const { return options_; }

 private:
  const EventStore& store_;
  ServiceOptions options_;
};

/// HTTP/1.1 front end for a QueryService. Requests run concurrently.
class HttpServer {
 public:
  /// With `ui_dir`, static files under it replace the built-in page at `/`.
  explicit HttpServer(const QueryService& service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aiql
