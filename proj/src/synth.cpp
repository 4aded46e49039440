// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

#include "aiql/ingest.hpp"

namespace aiql {

std::string_view to_string(HostRole role) {
  switch (role) {
    case HostRole::IrcServer: return "irc_server";
    case HostRole::IntranetHost: return "intranet_host";
    case HostRole::DomainController: return "domain_controller";
    case HostRole::DbServer: return "db_server";
    case HostRole::Attacker: return "attacker";
  }
  return "?";
}

namespace {

constexpr Timestamp kSecond = 1000;
constexpr Timestamp kMinute = 60 * kSecond;
constexpr Timestamp kHour = 60 * kMinute;
constexpr const char* kAttackerIp = "203.0.113.129";

std::string host_ip(AgentId agent) { return "10.0." + std::to_string(agent) + ".10"; }

/// Collects events with their entities, then commits them in timestamp order
/// with per-agent sequence numbers.
class ScenarioWriter {
 public:
  explicit ScenarioWriter(EventStore& store) : store_(store) {}

  EntityId process(AgentId agent, std::int64_t pid, const std::string& exe, const std::string& user = "") {
    AttrMap a{{"pid", pid}, {"exe_name", exe}};
    if (!user.empty()) a.emplace("user", user);
    return store_.upsert_entity(agent, EntityKind::Process, std::move(a));
  }
  EntityId file(AgentId agent, const std::string& name) {
    return store_.upsert_entity(agent, EntityKind::File, {{"name", name}});
  }
  EntityId channel(AgentId agent, std::int64_t src_port, const std::string& dst_ip, std::int64_t dst_port) {
    return store_.upsert_entity(agent, EntityKind::NetChannel,
                                {{"src_ip", host_ip(agent)},
                                 {"src_port", src_port},
                                 {"dst_ip", dst_ip},
                                 {"dst_port", dst_port},
                                 {"protocol", std::string("tcp")}});
  }

  void add(const std::string& tag, AgentId agent, EntityId subject, Operation op, EntityId object, Timestamp ts,
           Timestamp duration = 0, std::optional<std::uint64_t> amount = std::nullopt) {
    EventDraft d;
    d.agent_id = agent;
    d.subject_id = subject;
    d.op = op;
    d.object_id = object;
    d.start_ts = ts;
    d.end_ts = ts + duration;
    d.amount = amount;
    pending_.push_back({d, tag, pending_.size()});
  }

  /// Returns the committed ids of tagged events, grouped by tag.
  std::map<std::string, std::vector<EventId>> commit(std::size_t batch_size) {
    std::sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
      return std::tie(a.draft.start_ts, a.draft.agent_id, a.order) < std::tie(b.draft.start_ts, b.draft.agent_id, b.order);
    });
    std::unordered_map<AgentId, std::uint64_t> seq;
    for (auto& p : pending_) p.draft.seq = ++seq[p.draft.agent_id];

    std::map<std::string, std::vector<EventId>> tagged;
    EventId next_id = store_.stats_snapshot().events + 1;
    std::vector<EventDraft> batch;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      batch.push_back(pending_[i].draft);
      if (!pending_[i].tag.empty()) tagged[pending_[i].tag].push_back(next_id + i);
      if (batch.size() >= batch_size || i + 1 == pending_.size()) {
        store_.append_batch(batch);
        batch.clear();
      }
    }
    pending_.clear();
    store_.flush();
    return tagged;
  }

 private:
  struct Pending {
    EventDraft draft;
    std::string tag;
    std::size_t order;
  };
  EventStore& store_;
  std::vector<Pending> pending_;
};

// Benign executables never overlap the names used by planted chains.
const std::vector<std::string> kWindowsBenign = {"chrome.exe",  "outlook.exe",   "winword.exe",      "excel.exe",
                                                 "notepad.exe", "taskhost.exe",  "spoolsv.exe",      "svchost.exe",
                                                 "msmpeng.exe", "onedrive.exe",  "searchindexer.exe", "teams.exe"};
const std::vector<std::string> kLinuxBenign = {"/bin/bash",       "/usr/sbin/sshd", "/usr/sbin/cron", "/usr/sbin/nginx",
                                               "/usr/sbin/rsyslogd", "/usr/bin/python3", "/usr/bin/vim",
                                               "/usr/bin/git",    "/usr/lib/postgresql/bin/postgres"};

bool is_linux(HostRole role) { return role == HostRole::IrcServer || role == HostRole::Attacker; }

/// Zipf-like pool of internal addresses: a handful are busy, most are rare.
class AddressPool {
 public:
  explicit AddressPool(std::size_t size) {
    double total = 0;
    for (std::size_t k = 0; k < size; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), 1.1);
      cdf_.push_back(total);
    }
    for (auto& c : cdf_) c /= total;
  }
  static std::string address(std::size_t k) {
    return "10." + std::to_string(20 + k % 200) + "." + std::to_string(k / 200) + "." + std::to_string((k * 7) % 250 + 1);
  }
  std::size_t sample(std::mt19937_64& rng) const {
    double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

void add_noise(ScenarioWriter& w, AgentId agent, HostRole role, Timestamp day_start, std::uint64_t count,
               std::mt19937_64& rng, const AddressPool& pool) {
  if (count == 0) return;
  auto pick = [&](std::uint64_t n) { return rng() % n; };
  const auto& names = is_linux(role) ? kLinuxBenign : kWindowsBenign;
  const std::string home = is_linux(role) ? "/home/user/" : "C:\\Users\\user\\AppData\\";
  constexpr int kProcesses = 60;
  std::vector<EntityId> procs;
  std::vector<std::string> proc_names;
  for (int i = 0; i < kProcesses; ++i) {
    const std::string& exe = names[static_cast<std::size_t>(i) % names.size()];
    procs.push_back(w.process(agent, 1000 + i, exe, i % 3 ? "user" : "system"));
    proc_names.push_back(exe.substr(exe.find_last_of("/\\") + 1));
  }
  for (std::uint64_t n = 0; n < count; ++n) {
    const Timestamp ts = day_start + static_cast<Timestamp>(pick(static_cast<std::uint64_t>(kMillisPerDay - kMinute)));
    const std::size_t p = pick(kProcesses);
    const EntityId subject = procs[p];
    const std::uint64_t roll = pick(100);
    const std::uint64_t amount = 64 + pick(65536);
    if (roll < 70) {
      EntityId f = w.file(agent, home + proc_names[p] + "_" + std::to_string(pick(12)) + ".dat");
      w.add("", agent, subject, roll < 35 ? Operation::Read : Operation::Write, f, ts, static_cast<Timestamp>(pick(50)),
            amount);
    } else if (roll < 99) {
      const std::size_t k = pool.sample(rng);
      const std::int64_t src_port = 40000 + static_cast<std::int64_t>((p * 7919 + k) % 20000);
      EntityId c = w.channel(agent, src_port, AddressPool::address(k), 443);
      if (roll < 90) {
        w.add("", agent, subject, Operation::Write, c, ts, 5, 64 + pick(4096));
      } else if (roll < 95) {
        w.add("", agent, subject, Operation::Read, c, ts, 5, 64 + pick(4096));
      } else {
        w.add("", agent, subject, Operation::Connect, c, ts);
      }
    } else {
      w.add("", agent, subject, Operation::Start, procs[pick(kProcesses)], ts);
    }
  }
}

}  // namespace

nlohmann::json to_json(const AptManifest& m) {
  nlohmann::json steps = nlohmann::json::object();
  for (const auto& [k, ids] : m.steps) steps[k] = ids;
  return {{"agents",
           {{"irc_server", m.irc_agent},
            {"intranet_host", m.intranet_agent},
            {"domain_controller", m.dc_agent},
            {"db_server", m.db_agent},
            {"attacker", m.attacker_agent}}},
          {"attacker_ip", m.attacker_ip},
          {"steps", steps},
          {"artifacts", m.artifacts},
          {"burst_window_start", m.burst_window_start}};
}

AptManifest synthesize_apt(const ScenarioConfig& config, EventStore& store) {
  AptManifest m;
  std::map<HostRole, AgentId> hosts;
  std::set<AgentId> ids;
  for (const auto& [agent, role] : config.agents) {
    if (!ids.insert(agent).second) throw InvalidConfig("agent " + std::to_string(agent) + " listed twice");
    if (!hosts.emplace(role, agent).second)
      throw InvalidConfig("role " + std::string(to_string(role)) + " assigned twice");
  }
  for (HostRole role : {HostRole::IrcServer, HostRole::IntranetHost, HostRole::DomainController, HostRole::DbServer,
                        HostRole::Attacker}) {
    if (!hosts.count(role)) throw InvalidConfig("scenario needs a " + std::string(to_string(role)) + " host");
  }
  if (config.batch_size == 0) throw InvalidConfig("batch size must be positive");

  m.irc_agent = hosts[HostRole::IrcServer];
  m.intranet_agent = hosts[HostRole::IntranetHost];
  m.dc_agent = hosts[HostRole::DomainController];
  m.db_agent = hosts[HostRole::DbServer];
  m.attacker_agent = hosts[HostRole::Attacker];
  m.attacker_ip = kAttackerIp;

  const Timestamp day = floor_div(config.base_ts, kMillisPerDay) * kMillisPerDay;
  ScenarioWriter w(store);
  const AgentId irc = m.irc_agent, pc = m.intranet_agent, dc = m.dc_agent, db = m.db_agent;

  // a1: remote code execution in the IRC daemon opens a shell back to the attacker.
  Timestamp t = day + 9 * kHour + 12 * kMinute;
  EntityId ircd = w.process(irc, 2101, "/usr/sbin/unrealircd", "ircd");
  EntityId shell = w.process(irc, 2188, "/bin/sh", "ircd");
  EntityId inbound = w.channel(irc, 6667, kAttackerIp, 51515);
  EntityId reverse = w.channel(irc, 40100, kAttackerIp, 4444);
  w.add("a1", irc, ircd, Operation::Accept, inbound, t);
  w.add("a1", irc, ircd, Operation::Start, shell, t + 2 * kSecond);
  w.add("a1", irc, shell, Operation::Connect, reverse, t + 3 * kSecond);

  // a2: the malware arrives over that connection and spreads to the intranet host.
  t = day + 9 * kHour + 20 * kMinute;
  const std::string web_copy = "/var/www/html/info_stealer.exe";
  const std::string pc_copy = "C:\\Users\\alice\\Downloads\\info_stealer.exe";
  EntityId web_file = w.file(irc, web_copy);
  EntityId apache = w.process(irc, 1880, "/usr/sbin/apache2", "www-data");
  EntityId browser = w.process(pc, 3344, "iexplore.exe", "alice");
  EntityId pc_file = w.file(pc, pc_copy);
  w.add("a2", irc, shell, Operation::Read, reverse, t, 900, 184'320);
  w.add("a2", irc, shell, Operation::Write, web_file, t + kSecond, 20, 184'320);
  t = day + 10 * kHour + 5 * kMinute;
  w.add("a2", irc, apache, Operation::Read, web_file, t, 15, 184'320);
  w.add("a2", irc, apache, Operation::Connect, browser, t + kSecond);
  w.add("a2", pc, browser, Operation::Write, pc_file, t + 3 * kSecond, 40, 184'320);

  // a3: memory dumping tools on the domain controller.
  t = day + 10 * kHour + 30 * kMinute;
  EntityId stealer = w.process(pc, 3390, "info_stealer.exe", "alice");
  EntityId dc_shell = w.process(dc, 612, "explorer.exe", "administrator");
  EntityId mimikatz = w.process(dc, 4021, "mimikatz.exe", "administrator");
  EntityId kiwi = w.process(dc, 4077, "kiwi.exe", "administrator");
  w.add("a3", pc, browser, Operation::Start, stealer, t);
  w.add("a3", pc, stealer, Operation::Connect, dc_shell, t + 11 * kMinute);
  w.add("a3", dc, dc_shell, Operation::Start, mimikatz, t + 12 * kMinute);
  w.add("a3", dc, mimikatz, Operation::Write, w.file(dc, "C:\\Windows\\Temp\\lsass.dmp"), t + 12 * kMinute + 30 * kSecond,
        800, 48'234'496);
  w.add("a3", dc, dc_shell, Operation::Start, kiwi, t + 20 * kMinute);
  w.add("a3", dc, kiwi, Operation::Write, w.file(dc, "C:\\Windows\\Temp\\kiwi_logon.txt"), t + 20 * kMinute + 20 * kSecond,
        10, 4096);

  // a4: password dumping on the database server.
  t = day + 11 * kHour + 30 * kMinute;
  EntityId psexec = w.process(db, 5120, "psexesvc.exe", "system");
  EntityId pwdump = w.process(db, 5133, "pwdump7.exe", "system");
  EntityId wce = w.process(db, 5141, "wce.exe", "system");
  w.add("a4", dc, dc_shell, Operation::Connect, psexec, t);
  w.add("a4", db, psexec, Operation::Start, pwdump, t + kMinute);
  w.add("a4", db, pwdump, Operation::Write, w.file(db, "C:\\Windows\\Temp\\hashes.txt"), t + kMinute + 10 * kSecond, 5,
        2048);
  w.add("a4", db, psexec, Operation::Start, wce, t + 5 * kMinute);
  w.add("a4", db, wce, Operation::Write, w.file(db, "C:\\Windows\\Temp\\wce_out.txt"), t + 5 * kMinute + 10 * kSecond, 5,
        1024);

  // a5: database dump exfiltrated by the implant, which also beacons every 10 s.
  t = day + 12 * kHour + 58 * kMinute;
  EntityId implant_file = w.file(db, "C:\\Windows\\Temp\\sbblv.exe");
  EntityId cmd = w.process(db, 5200, "cmd.exe", "system");
  EntityId implant = w.process(db, 5230, "sbblv.exe", "system");
  EntityId osql = w.process(db, 5244, "osql.exe", "system");
  EntityId dump = w.file(db, "D:\\backup\\backup1.dmp");
  EntityId exfil = w.channel(db, 49733, kAttackerIp, 443);
  w.add("a5", db, psexec, Operation::Write, implant_file, t, 30, 96'256);
  w.add("a5", db, psexec, Operation::Start, cmd, t + kMinute);
  w.add("a5", db, psexec, Operation::Start, implant, t + kMinute + 30 * kSecond);
  w.add("a5", db, implant, Operation::Connect, exfil, t + kMinute + 40 * kSecond);
  const Timestamp beacon0 = day + 13 * kHour + 5 * kSecond;
  for (int i = 0; i <= 180; ++i) w.add("a5", db, implant, Operation::Write, exfil, beacon0 + i * 10 * kSecond, 2, 512);
  w.add("a5", db, cmd, Operation::Start, osql, day + 13 * kHour + 5 * kMinute);
  w.add("a5", db, osql, Operation::Write, dump, day + 13 * kHour + 6 * kMinute, 40 * kSecond, 52'428'800);
  w.add("a5", db, implant, Operation::Read, dump, day + 13 * kHour + 10 * kMinute, 30 * kSecond, 52'428'800);
  const Timestamp burst = day + 13 * kHour + 12 * kMinute + 2 * kSecond;
  w.add("a5", db, implant, Operation::Write, exfil, burst, 45 * kSecond, 52'428'800);
  // First 60 s window on the 10 s grid (anchored at the day start) that holds the burst.
  m.burst_window_start = day + (floor_div(burst - 60 * kSecond - day, 10 * kSecond) + 1) * 10 * kSecond;

  m.artifacts = {{"a1_daemon", "/usr/sbin/unrealircd"},
                 {"a1_shell", "/bin/sh"},
                 {"a2_web_copy", web_copy},
                 {"a2_web_server", "/usr/sbin/apache2"},
                 {"a2_browser", "iexplore.exe"},
                 {"a2_intranet_copy", pc_copy},
                 {"a3_malware", "info_stealer.exe"},
                 {"a3_foothold", "explorer.exe"},
                 {"a3_tools", "mimikatz.exe,kiwi.exe"},
                 {"a4_service", "psexesvc.exe"},
                 {"a4_tools", "pwdump7.exe,wce.exe"},
                 {"a5_shell", "cmd.exe"},
                 {"a5_dumper", "osql.exe"},
                 {"a5_dump", "D:\\backup\\backup1.dmp"},
                 {"a5_implant", "sbblv.exe"}};

  std::mt19937_64 rng(config.rng_seed);
  AddressPool pool(4000);
  for (const auto& [agent, role] : config.agents)
    add_noise(w, agent, role, day, config.noise_events_per_agent, rng, pool);

  m.steps = w.commit(config.batch_size);
  return m;
}

nlohmann::json to_json(const AnomalyManifest& m) {
  return {{"agent", m.agent},
          {"process", m.process},
          {"exe_name", m.exe_name},
          {"benign", m.benign},
          {"window_starts", m.window_starts},
          {"window_ms", m.window_ms},
          {"step_ms", m.step_ms}};
}

namespace {

/// Windows flagged by `amt > 2 * (amt + amt[1] + amt[2]) / 3` for one
/// series with exactly one event per step, evaluated per grid frame.
std::vector<Timestamp> spike_windows(const std::vector<std::uint64_t>& per_step, Timestamp base, Timestamp step,
                                     std::size_t per_window) {
  const std::size_t n = per_step.size();
  auto frame_avg = [&](std::size_t j) {
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t k = j; k < j + per_window && k < n; ++k, ++count) sum += static_cast<double>(per_step[k]);
    return sum / static_cast<double>(count);
  };
  std::vector<Timestamp> out;
  for (std::size_t j = 2; j < n; ++j) {
    const double amt = frame_avg(j);
    if (amt > 2 * (amt + frame_avg(j - 1) + frame_avg(j - 2)) / 3) out.push_back(base + static_cast<Timestamp>(j) * step);
  }
  return out;
}

}  // namespace

AnomalyManifest synthesize_anomaly_stream(const AnomalyStreamConfig& config, EventStore& store) {
  if (config.step_ms <= 0 || config.window_ms < config.step_ms || config.window_ms % config.step_ms != 0)
    throw InvalidConfig("window must be a positive multiple of step");
  const auto per_window = static_cast<std::size_t>(config.window_ms / config.step_ms);
  if (config.steps < 4 * per_window) throw InvalidConfig("stream too short for the window");
  if (config.base_amount == 0) throw InvalidConfig("base amount must be positive");

  std::mt19937_64 rng(config.rng_seed);
  ScenarioWriter w(store);
  AnomalyManifest m;
  m.agent = config.agent;
  m.window_ms = config.window_ms;
  m.step_ms = config.step_ms;

  static const std::vector<std::string> kServices = {"sqlservr.exe", "sqlagent.exe", "replsvc.exe", "backupsvc.exe",
                                                     "reportsvc.exe", "ssisagent.exe"};
  // Offsets keep every event strictly inside its step.
  auto offset = [&](std::size_t series) {
    return static_cast<Timestamp>((series + 1) * static_cast<std::size_t>(config.step_ms) /
                                  (config.benign_processes + 2));
  };

  for (unsigned i = 0; i < config.benign_processes; ++i) {
    EntityId proc = w.process(config.agent, 7000 + i, kServices[i % kServices.size()], "svc");
    EntityId chan = w.channel(config.agent, 50000 + i, config.dst_ip, 443);
    const std::uint64_t amount = config.base_amount * (1 + rng() % 3);
    std::vector<std::uint64_t> series(config.steps, amount);
    if (!spike_windows(series, config.base_ts, config.step_ms, per_window).empty())
      throw InvalidConfig("flat series unexpectedly qualifies");
    for (unsigned k = 0; k < config.steps; ++k)
      w.add("", config.agent, proc, Operation::Write, chan, config.base_ts + k * config.step_ms + offset(i), 2, amount);
    m.benign.push_back(proc);
  }

  m.exe_name = "powershell.exe";
  m.process = w.process(config.agent, 7100, m.exe_name, "svc");
  EntityId chan = w.channel(config.agent, 50100, config.dst_ip, 443);
  std::vector<std::uint64_t> series(config.steps, config.base_amount);
  const unsigned burst_step = config.steps / 3 + static_cast<unsigned>(rng() % (config.steps / 3));
  series[burst_step] = config.burst_amount;
  for (unsigned k = 0; k < config.steps; ++k)
    w.add("", config.agent, m.process, Operation::Write, chan,
          config.base_ts + k * config.step_ms + offset(config.benign_processes), 2, series[k]);
  m.window_starts = spike_windows(series, config.base_ts, config.step_ms, per_window);
  if (m.window_starts.size() != 1) throw InvalidConfig("burst amount too small to stand out in exactly one window");
  w.commit(10'000);
  return m;
}

}  // namespace aiql
