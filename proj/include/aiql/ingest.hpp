// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aiql/event_store.hpp"

namespace aiql {

class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestReport {
  std::size_t committed = 0;
  std::vector<RejectedLine> rejected;
};

struct IngestOptions {
  std::size_t batch_size = 1000;
};

/// Reads JSON-lines raw records (see docs/ingest-format.md). Bad lines are
/// reported, not fatal; each batch commits atomically.
IngestReport ingest_stream(std::istream& in, EventStore& store, const IngestOptions& options = {});
IngestReport ingest_file(const std::filesystem::path& path, EventStore& store, const IngestOptions& options = {});

/// One raw record as it appears in an ingest file.
nlohmann::json raw_record(const Event& e, const Entity& subject, const Entity& object);

// --- synthetic scenarios ------------------------------------------------------

enum class HostRole : std::uint8_t { IrcServer, IntranetHost, DomainController, DbServer, Attacker };

std::string_view to_string(HostRole role);

struct ScenarioConfig {
  Timestamp base_ts = 1523491200000;  // 2018-04-12T00:00:00Z
  std::vector<std::pair<AgentId, HostRole>> agents = {{1, HostRole::IrcServer},
                                                      {2, HostRole::IntranetHost},
                                                      {3, HostRole::DomainController},
                                                      {4, HostRole::DbServer},
                                                      {5, HostRole::Attacker}};
  std::uint64_t noise_events_per_agent = 2000;
  std::uint64_t rng_seed = 1;
  std::size_t batch_size = 10'000;
};

struct AptManifest {
  AgentId irc_agent = 0;
  AgentId intranet_agent = 0;
  AgentId dc_agent = 0;
  AgentId db_agent = 0;
  AgentId attacker_agent = 0;
  std::string attacker_ip;
  /// Planted event ids keyed "a1".."a5".
  std::map<std::string, std::vector<EventId>> steps;
  /// Named artifacts (process and file names) used by the planted chains.
  std::map<std::string, std::string> artifacts;
  /// Start of the one window in which the exfiltration burst stands out.
  Timestamp burst_window_start = 0;
};

nlohmann::json to_json(const AptManifest& m);

AptManifest synthesize_apt(const ScenarioConfig& config, EventStore& store);

struct AnomalyStreamConfig {
  Timestamp base_ts = 1523491200000;
  AgentId agent = 4;
  std::string dst_ip = "203.0.113.129";
  unsigned benign_processes = 3;
  /// Stream length in steps.
  unsigned steps = 180;
  Timestamp window_ms = 60'000;
  Timestamp step_ms = 10'000;
  std::uint64_t base_amount = 10;
  std::uint64_t burst_amount = 1000;
  std::uint64_t rng_seed = 1;
};

struct AnomalyManifest {
  AgentId agent = 0;
  EntityId process = 0;
  std::string exe_name;
  std::vector<EntityId> benign;
  std::vector<Timestamp> window_starts;
  Timestamp window_ms = 0;
  Timestamp step_ms = 0;
};

nlohmann::json to_json(const AnomalyManifest& m);

/// Flat-rate transfer series to one address plus a single burst from one
/// process, sized so that exactly one window qualifies as a spike.
AnomalyManifest synthesize_anomaly_stream(const AnomalyStreamConfig& config, EventStore& store);

}  // namespace aiql
