// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "aiql/event_store.hpp"
#include "support/naive_oracle.hpp"
#include "support/random_predicate.hpp"
#include "support/random_store.hpp"

namespace aiql {
namespace {

namespace fs = std::filesystem;
using testing::make_random_store;
using testing::oracle_scan;
using testing::RandomStoreConfig;
using testing::Universe;

constexpr Timestamp kDay0 = 1'523'491'200'000;  // 2018-04-12T00:00:00Z

AttrMap proc_attrs(std::int64_t pid, const std::string& exe) { return {{"pid", pid}, {"exe_name", exe}}; }

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("aiql_store_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(UpsertEntity, SameIdentityDedups) {
  EventStore store;
  auto a = store.upsert_entity(1, EntityKind::Process, proc_attrs(42, "osql.exe"));
  auto b = store.upsert_entity(1, EntityKind::Process, proc_attrs(42, "osql.exe"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(store.stats_snapshot().entities, 1u);
}

TEST(UpsertEntity, DistinctFilesGetDistinctIds) {
  EventStore store;
  auto a = store.upsert_entity(1, EntityKind::File, {{"name", std::string("backup1.dmp")}});
  auto b = store.upsert_entity(1, EntityKind::File, {{"name", std::string("sbblv.exe")}});
  EXPECT_NE(a, b);
}

TEST(UpsertEntity, AgentIsPartOfIdentity) {
  EventStore store;
  auto a = store.upsert_entity(1, EntityKind::File, {{"name", std::string("x")}});
  auto b = store.upsert_entity(2, EntityKind::File, {{"name", std::string("x")}});
  EXPECT_NE(a, b);
}

TEST(UpsertEntity, MissingIdentityAttribute) {
  EventStore store;
  EXPECT_THROW(store.upsert_entity(1, EntityKind::Process, {{"pid", std::int64_t{1}}}), MissingIdentityAttribute);
  EXPECT_THROW(store.upsert_entity(1, EntityKind::File, {}), MissingIdentityAttribute);
  EXPECT_THROW(store.upsert_entity(1, EntityKind::File, {{"name", std::string()}}), MissingIdentityAttribute);
}

// Replays random upserts against a map-based reference: identity tuple ->
// (id, merged attributes with last-writer-wins).
TEST(UpsertEntity, MatchesMapReference) {
  EventStore store;
  std::map<std::tuple<AgentId, std::int64_t, std::string>, std::pair<EntityId, AttrMap>> reference;
  std::mt19937_64 rng(11);
  const std::vector<std::string> exes = {"osql.exe", "a.exe", "b.exe"};
  const std::vector<std::string> users = {"svc", "root", "alice"};
  for (int i = 0; i < 2000; ++i) {
    AgentId agent = 1 + rng() % 2;
    std::int64_t pid = static_cast<std::int64_t>(rng() % 5);
    auto exe = exes[rng() % exes.size()];
    AttrMap attrs = proc_attrs(pid, exe);
    if (rng() % 2) attrs["user"] = users[rng() % users.size()];
    if (rng() % 3 == 0) attrs["cmd"] = "run " + std::to_string(rng() % 4);
    auto id = store.upsert_entity(agent, EntityKind::Process, attrs);
    auto key = std::make_tuple(agent, pid, exe);
    auto it = reference.find(key);
    if (it == reference.end()) {
      reference.emplace(key, std::make_pair(id, attrs));
    } else {
      EXPECT_EQ(it->second.first, id);
      for (auto& [k, v] : attrs) it->second.second[k] = v;
    }
  }
  EXPECT_EQ(store.stats_snapshot().entities, reference.size());
  for (const auto& [key, ref] : reference) EXPECT_EQ(store.entity(ref.first)->attrs, ref.second);
}

TEST(UpsertEntity, NonIdentityAttributeLastWriterWins) {
  EventStore store;
  auto a = store.upsert_entity(1, EntityKind::Process, proc_attrs(42, "osql.exe"));
  auto with_user = proc_attrs(42, "osql.exe");
  with_user["user"] = std::string("svc");
  auto b = store.upsert_entity(1, EntityKind::Process, with_user);
  EXPECT_EQ(a, b);
  EXPECT_EQ(store.entity(a)->attrs.at("user"), Value{std::string("svc")});
  // The value index follows the merge.
  ScanPredicate pred;
  pred.subject = Predicate::of({"user", Comparator::Eq, std::string("svc")});
  auto f = store.upsert_entity(1, EntityKind::File, {{"name", std::string("f")}});
  EventDraft d{1, a, Operation::Read, f, kDay0, kDay0, 1, 10};
  store.append_batch(std::span(&d, 1));
  EXPECT_EQ(store.scan(pred).size(), 1u);
}

struct SmallFixture {
  EventStore store;
  EntityId osql, sbblv, dump, chan;
  SmallFixture() {
    osql = store.upsert_entity(1, EntityKind::Process, proc_attrs(42, "osql.exe"));
    sbblv = store.upsert_entity(1, EntityKind::Process, proc_attrs(43, "sbblv.exe"));
    dump = store.upsert_entity(1, EntityKind::File, {{"name", std::string("backup1.dmp")}});
    chan = store.upsert_entity(1, EntityKind::NetChannel,
                               {{"src_ip", std::string("10.0.0.4")},
                                {"src_port", std::int64_t{5000}},
                                {"dst_ip", std::string("203.0.113.129")},
                                {"dst_port", std::int64_t{443}},
                                {"protocol", std::string("tcp")}});
  }
  std::vector<EventDraft> three() const {
    return {{1, osql, Operation::Write, dump, kDay0 + 1000, kDay0 + 1500, 1, 100},
            {1, sbblv, Operation::Read, dump, kDay0 + 2000, kDay0 + 2100, 2, 100},
            {1, sbblv, Operation::Write, chan, kDay0 + 3000, kDay0 + 3100, 3, 100}};
  }
};

TEST(AppendBatch, CommitsAndIsScannable) {
  SmallFixture fx;
  auto drafts = fx.three();
  EXPECT_EQ(fx.store.append_batch(drafts), 3u);
  EXPECT_EQ(fx.store.scan({}).size(), 3u);
  EXPECT_EQ(fx.store.stats_snapshot().events, 3u);
}

TEST(AppendBatch, MissingEntityCommitsNothing) {
  SmallFixture fx;
  auto drafts = fx.three();
  drafts[1].object_id = 999;
  EXPECT_THROW(fx.store.append_batch(drafts), UnknownEntityId);
  EXPECT_EQ(fx.store.stats_snapshot().events, 0u);
  EXPECT_TRUE(fx.store.scan({}).empty());
}

TEST(AppendBatch, InvalidEventAndSeqOrder) {
  SmallFixture fx;
  auto drafts = fx.three();
  drafts[0].op = Operation::Start;  // start on a file
  drafts[0].amount.reset();
  EXPECT_THROW(fx.store.append_batch(drafts), InvalidEvent);
  drafts = fx.three();
  drafts[2].seq = 1;
  EXPECT_THROW(fx.store.append_batch(drafts), OutOfOrderSeq);
  EXPECT_EQ(fx.store.stats_snapshot().events, 0u);
}

TEST(AppendBatch, StoreAssignsMonotoneSeq) {
  SmallFixture fx;
  auto drafts = fx.three();
  fx.store.append_batch(drafts);
  fx.store.append_batch(drafts);  // same source seqs again: accepted, stored seqs keep rising
  auto events = fx.store.all_events();
  ASSERT_EQ(events.size(), 6u);
  std::vector<std::uint64_t> seqs;
  for (EventId id = 1; id <= 6; ++id) seqs.push_back(fx.store.event(id)->seq);
  EXPECT_TRUE(std::is_sorted(seqs.begin(), seqs.end()));
  EXPECT_EQ(seqs.back(), 6u);
}

TEST(AppendBatch, RoutesAcrossAgentsAndDays) {
  RandomStoreConfig cfg;
  cfg.events = 10'000;
  cfg.agents = 2;
  cfg.days = 2;
  cfg.batch = 10'000;
  auto rs = make_random_store(cfg, 5);
  auto parts = rs.store.partitions();
  EXPECT_EQ(parts.size(), 4u);
  std::size_t total = 0;
  for (const auto& key : parts) {
    auto events = rs.store.scan_partition(key, {});
    total += events.size();
    for (const auto& e : events) EXPECT_EQ(partition_key(e.agent_id, e.start_ts), key);
  }
  EXPECT_EQ(total, 10'000u);
  EXPECT_EQ(rs.store.scan({}).size(), 10'000u);
}

TEST(Scan, IndexedPredicateMatchesOracle) {
  RandomStoreConfig cfg;
  cfg.events = 2000;
  auto rs = make_random_store(cfg, 3);
  ScanPredicate pred;
  pred.subject = Predicate::of({"exe_name", Comparator::Eq, std::string("osql.exe")});
  pred.ops = OpSet{Operation::Read, Operation::Write};
  Universe u(rs.store);
  auto expected = oracle_scan(pred, u);
  EXPECT_FALSE(expected.empty());
  EXPECT_EQ(rs.store.scan(pred), expected);
}

TEST(Scan, EmptyAgentSetAndEmptyTimeRange) {
  SmallFixture fx;
  auto drafts = fx.three();
  fx.store.append_batch(drafts);
  ScanPredicate no_agents;
  no_agents.agents = std::vector<AgentId>{};
  EXPECT_TRUE(fx.store.scan(no_agents).empty());
  ScanPredicate no_time;
  no_time.time = {kDay0 + 10'000, kDay0 + 20'000};
  EXPECT_TRUE(fx.store.scan(no_time).empty());
  ScanPredicate inverted;
  inverted.time = {kDay0 + 5, kDay0};
  EXPECT_TRUE(fx.store.scan(inverted).empty());
}

TEST(EstimateCount, ExactForSingleIndexedEquality) {
  SmallFixture fx;
  std::vector<EventDraft> drafts;
  for (std::uint64_t i = 0; i < 5; ++i)
    drafts.push_back({1, fx.osql, Operation::Write, fx.dump, kDay0 + static_cast<Timestamp>(i), kDay0 + 10, i + 1, 1});
  for (std::uint64_t i = 0; i < 17; ++i)
    drafts.push_back(
        {1, fx.sbblv, Operation::Read, fx.dump, kDay0 + 100 + static_cast<Timestamp>(i), kDay0 + 200, i + 10, 1});
  fx.store.append_batch(drafts);
  ScanPredicate pred;
  pred.subject = Predicate::of({"exe_name", Comparator::Eq, std::string("osql.exe")});
  EXPECT_DOUBLE_EQ(fx.store.estimate_count(pred), 5.0);
  pred.subject = Predicate::of({"exe_name", Comparator::Eq, std::string("nothing.exe")});
  EXPECT_DOUBLE_EQ(fx.store.estimate_count(pred), 0.0);
}

TEST(EstimateCount, UnindexedLikeUsesDefaultSelectivity) {
  SmallFixture fx;
  auto drafts = fx.three();
  fx.store.append_batch(drafts);
  ScanPredicate pred;
  pred.object = Predicate::of({"name", Comparator::Like, std::string("%dmp%")});
  EXPECT_DOUBLE_EQ(fx.store.estimate_count(pred), 3 * kDefaultSelectivity);
}

TEST(EstimateCount, EmptyStoreIsZero) {
  EventStore store;
  ScanPredicate pred;
  pred.subject = Predicate::of({"exe_name", Comparator::Like, std::string("%")});
  EXPECT_DOUBLE_EQ(store.estimate_count(pred), 0.0);
  EXPECT_DOUBLE_EQ(store.estimate_count({}), 0.0);
}

TEST(StatsSnapshot, Counts) {
  EventStore empty;
  EXPECT_EQ(empty.stats_snapshot(), StoreStats{});
  SmallFixture fx;
  auto drafts = fx.three();
  fx.store.append_batch(drafts);
  auto st = fx.store.stats_snapshot();
  EXPECT_EQ(st.events, 3u);
  EXPECT_EQ(st.entities, 4u);
  EXPECT_EQ(st.partitions, 1u);
  EXPECT_EQ(st.entities_by_kind[static_cast<std::size_t>(EntityKind::Process)], 2u);
  EXPECT_EQ(st.events_by_type[static_cast<std::size_t>(EventType::FileEvent)], 2u);
  EXPECT_EQ(st.events_by_type[static_cast<std::size_t>(EventType::NetworkEvent)], 1u);
}

TEST(Persistence, ReopenRestoresContents) {
  auto dir = temp_dir("reopen");
  {
    auto store = EventStore::open(dir);
    auto p = store.upsert_entity(1, EntityKind::Process, proc_attrs(1, "a.exe"));
    auto f = store.upsert_entity(1, EntityKind::File, {{"name", std::string("x")}});
    std::vector<EventDraft> drafts = {{1, p, Operation::Write, f, kDay0, kDay0, 1, 5},
                                      {1, p, Operation::Read, f, kDay0 + kMillisPerDay, kDay0 + kMillisPerDay, 2, 5}};
    store.append_batch(drafts);
  }
  EXPECT_TRUE(fs::exists(dir / "MANIFEST"));
  EXPECT_TRUE(fs::exists(dir / "catalog.jsonl"));
  EXPECT_TRUE(fs::exists(dir / ("part-1-" + std::to_string(kDay0 / kMillisPerDay) + ".jsonl")));
  auto reopened = EventStore::open(dir, true);
  EXPECT_EQ(reopened.stats_snapshot().events, 2u);
  EXPECT_EQ(reopened.stats_snapshot().partitions, 2u);
  ScanPredicate pred;
  pred.subject = Predicate::of({"exe_name", Comparator::Eq, std::string("a.exe")});
  EXPECT_EQ(reopened.scan(pred).size(), 2u);
  fs::remove_all(dir);
}

TEST(Persistence, TornTailIsIgnoredAndTruncated) {
  auto dir = temp_dir("torn");
  EntityId p = 0, f = 0;
  {
    auto store = EventStore::open(dir);
    p = store.upsert_entity(1, EntityKind::Process, proc_attrs(1, "a.exe"));
    f = store.upsert_entity(1, EntityKind::File, {{"name", std::string("x")}});
    EventDraft d{1, p, Operation::Write, f, kDay0, kDay0, 1, 5};
    store.append_batch(std::span(&d, 1));
  }
  auto part = dir / ("part-1-" + std::to_string(kDay0 / kMillisPerDay) + ".jsonl");
  {
    std::ofstream out(part, std::ios::app);
    out << "{\"id\":2,\"agent_";  // interrupted write past the manifest
  }
  {
    auto store = EventStore::open(dir);
    EXPECT_EQ(store.stats_snapshot().events, 1u);
    EventDraft d{1, p, Operation::Read, f, kDay0 + 1, kDay0 + 1, 2, 5};
    store.append_batch(std::span(&d, 1));
  }
  auto store = EventStore::open(dir, true);
  EXPECT_EQ(store.stats_snapshot().events, 2u);
  EXPECT_EQ(store.event(2)->op, Operation::Read);
  fs::remove_all(dir);
}

TEST(Persistence, FailedBatchLeavesFilesUntouched) {
  auto dir = temp_dir("atomic");
  auto store = EventStore::open(dir);
  auto p = store.upsert_entity(1, EntityKind::Process, proc_attrs(1, "a.exe"));
  auto f = store.upsert_entity(1, EntityKind::File, {{"name", std::string("x")}});
  EventDraft ok{1, p, Operation::Write, f, kDay0, kDay0, 1, 5};
  store.append_batch(std::span(&ok, 1));
  auto manifest = read_file(dir / "MANIFEST");
  std::vector<EventDraft> bad = {ok, ok};
  bad[1].seq = 2;
  bad[1].object_id = 77;
  EXPECT_THROW(store.append_batch(bad), UnknownEntityId);
  EXPECT_EQ(read_file(dir / "MANIFEST"), manifest);
  fs::remove_all(dir);
}

// --- properties -------------------------------------------------------------

TEST(StoreProperty, ScanEqualsNaiveFilter) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStoreConfig cfg;
    cfg.events = 500 + seed * 200;
    cfg.agents = 1 + seed % 3;
    cfg.days = 1 + static_cast<int>(seed % 2);
    auto rs = make_random_store(cfg, seed);
    Universe u(rs.store);
    std::mt19937_64 rng(seed * 31 + 1);
    for (int q = 0; q < 40; ++q) {
      auto pred = testing::random_scan_predicate(rng, cfg);
      auto got = rs.store.scan(pred);
      ASSERT_EQ(got, oracle_scan(pred, u)) << "seed " << seed << " query " << q;
      for (std::size_t i = 1; i < got.size(); ++i) {
        ASSERT_LE(got[i - 1].start_ts, got[i].start_ts);
        if (got[i - 1].start_ts == got[i].start_ts && got[i - 1].agent_id == got[i].agent_id)
          ASSERT_LT(got[i - 1].seq, got[i].seq);
      }
    }
  }
}

TEST(StoreProperty, EstimateOrdersPairsThatDifferTenfold) {
  RandomStoreConfig cfg;
  cfg.events = 10'000;
  cfg.agents = 2;
  cfg.processes_per_agent = 30;
  cfg.files_per_agent = 40;
  auto rs = make_random_store(cfg, 99);
  Universe u(rs.store);
  std::mt19937_64 rng(1234);
  std::vector<std::pair<std::size_t, double>> samples;
  for (int i = 0; i < 600; ++i) {
    auto pred = testing::random_scan_predicate(rng, cfg);
    samples.emplace_back(oracle_scan(pred, u).size(), rs.store.estimate_count(pred));
  }
  int pairs = 0, correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      auto [ci, ei] = samples[i];
      auto [cj, ej] = samples[j];
      auto lo = std::min(ci, cj), hi = std::max(ci, cj);
      if (hi < 10 || hi < 10 * lo) continue;
      ++pairs;
      bool ok = ci > cj ? ei > ej : ej > ei;
      correct += ok;
    }
  }
  ASSERT_GE(pairs, 100);
  EXPECT_GE(static_cast<double>(correct) / pairs, 0.9) << correct << "/" << pairs;
}

}  // namespace
}  // namespace aiql
