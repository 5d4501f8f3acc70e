#include "ppcc/checker.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "ppcc/rng.hpp"

namespace ppcc {
namespace {

TxnId tx(std::uint64_t id, std::uint32_t inc = 0) { return TxnId{id, inc}; }

/// Fluent history builder for tests; seq and time advance together.
struct H {
  HistoryLog log;
  SimTime t = 0;

  H& read(TxnId txn, std::uint32_t item) {
    log.record(++t, txn, EventKind::ReadExec, ItemId{item});
    return *this;
  }
  H& flush(TxnId txn, std::uint32_t item) {
    log.record(++t, txn, EventKind::Flush, ItemId{item});
    return *this;
  }
  H& commit(TxnId txn) {
    log.record(++t, txn, EventKind::Commit);
    return *this;
  }
  H& abort(TxnId txn) {
    log.record(++t, txn, EventKind::Abort);
    return *this;
  }
  const std::vector<HistoryEvent>& events() { return log.events(); }
};

TEST(BuildSg, Example4ShapedHistory) {
  // T1 aborted after one read; T2 commits writes of a and b.
  H h;
  h.read(tx(1), 0).read(tx(2), 1).abort(tx(1));
  h.flush(tx(2), 0).flush(tx(2), 1).commit(tx(2));
  const auto sg = build_sg(h.events());
  EXPECT_EQ(sg.size(), 1u);
  EXPECT_EQ(sg.edge_count(), 0u);
  EXPECT_TRUE(is_acyclic(sg));
}

TEST(BuildSg, DisjointItemsNoEdges) {
  H h;
  h.read(tx(1), 0).flush(tx(1), 0).commit(tx(1));
  h.read(tx(2), 1).flush(tx(2), 1).commit(tx(2));
  const auto sg = build_sg(h.events());
  EXPECT_EQ(sg.size(), 2u);
  EXPECT_EQ(sg.edge_count(), 0u);
}

TEST(BuildSg, ReadBeforeFlushGivesReaderFirstEdge) {
  H h;
  h.read(tx(2), 0);                       // T2 reads the old value of a
  h.flush(tx(1), 0).commit(tx(1));        // T1 then installs its write
  h.flush(tx(2), 5).commit(tx(2));
  const auto sg = build_sg(h.events());
  const auto edges = sg.edges();
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].first, tx(2));
  EXPECT_EQ(edges[0].second, tx(1));
  EXPECT_TRUE(is_acyclic(sg));
}

TEST(BuildSg, UncommittedOperationsAreInvisible) {
  H h;
  h.read(tx(3), 0);  // never commits
  h.flush(tx(1), 0).commit(tx(1));
  const auto sg = build_sg(h.events());
  EXPECT_EQ(sg.size(), 1u);
  EXPECT_EQ(sg.edge_count(), 0u);
}

TEST(IsAcyclic, EmptyGraphIsAcyclic) {
  EXPECT_TRUE(is_acyclic(build_sg({})));
}

TEST(IsAcyclic, TwoCycleDetected) {
  // Write skew: each reads what the other later flushes.
  H h;
  h.read(tx(1), 0).read(tx(2), 1);
  h.flush(tx(1), 1).commit(tx(1));
  h.flush(tx(2), 0).commit(tx(2));
  const auto sg = build_sg(h.events());
  EXPECT_EQ(sg.edge_count(), 2u);
  EXPECT_FALSE(is_acyclic(sg));
}

TEST(BruteForce, SingleCommittedTxnSerializable) {
  H h;
  h.read(tx(1), 0).flush(tx(1), 0).commit(tx(1));
  EXPECT_TRUE(brute_force_serializable(h.events()));
}

TEST(BruteForce, LostUpdateNotSerializable) {
  // Both read x, then both flush x.
  H h;
  h.read(tx(1), 0).read(tx(2), 0);
  h.flush(tx(1), 0).commit(tx(1));
  h.flush(tx(2), 0).commit(tx(2));
  EXPECT_FALSE(brute_force_serializable(h.events()));
  EXPECT_FALSE(is_acyclic(build_sg(h.events())));
}

TEST(BruteForce, RejectsLargeHistories) {
  H h;
  for (std::uint64_t i = 1; i <= 9; ++i)
    h.read(tx(i), 0).commit(tx(i));
  EXPECT_THROW(brute_force_serializable(h.events()), HistoryTooLarge);
}

TEST(Malformed, SequenceMustIncrease) {
  std::vector<HistoryEvent> events{
      {5, 0, tx(1), EventKind::ReadExec, ItemId{0}},
      {5, 1, tx(1), EventKind::Commit, std::nullopt},
  };
  EXPECT_THROW(build_sg(events), MalformedHistory);
}

TEST(Malformed, NoEventsAfterTerminal) {
  H h;
  h.read(tx(1), 0).commit(tx(1)).read(tx(1), 1);
  EXPECT_THROW(build_sg(h.events()), MalformedHistory);
}

TEST(Malformed, CommitNeedsAPrecedingEvent) {
  H h;
  h.commit(tx(1));
  EXPECT_THROW(build_sg(h.events()), MalformedHistory);
}

TEST(HistoryIo, RoundTrip) {
  H h;
  h.read(tx(1), 3).flush(tx(1), 3).commit(tx(1)).abort(tx(2, 1));
  h.log.record(99, tx(4), EventKind::Block, std::nullopt);
  std::stringstream ss;
  write_history(ss, h.events());
  const auto back = read_history(ss);
  EXPECT_EQ(back, h.events());
}

TEST(HistoryIo, RejectsGarbage) {
  std::stringstream bad("0 0 1 0 ReadExec");  // missing item field
  EXPECT_THROW(read_history(bad), MalformedHistory);
  std::stringstream unknown("0 0 1 0 Frobnicate 3");
  EXPECT_THROW(read_history(unknown), MalformedHistory);
  std::stringstream noitem("0 0 1 0 Flush -");
  EXPECT_THROW(read_history(noitem), MalformedHistory);
}

// ---- randomized cross-validation of the two serializability routes ------

/// Random strict-protocol-shaped history: reads happen while a transaction
/// lives, its flushes land as one block at the commit point, aborted
/// incarnations never flush. Interleavings are unconstrained, so both
/// serializable and non-serializable histories come out.
std::vector<HistoryEvent> random_history(Rng& rng) {
  const std::size_t n_txns = 1 + rng.uniform_u64(8);
  const std::uint32_t n_items = 1 + static_cast<std::uint32_t>(rng.uniform_u64(6));
  struct Plan {
    TxnId id;
    std::vector<std::uint32_t> reads;
    std::vector<std::uint32_t> writes;
    std::size_t next_read = 0;
    bool commits = false;
    bool done = false;
  };
  std::vector<Plan> plans;
  for (std::size_t i = 0; i < n_txns; ++i) {
    Plan p;
    p.id = tx(i + 1);
    const std::size_t n_reads = 1 + rng.uniform_u64(3);
    for (std::size_t r = 0; r < n_reads; ++r)
      p.reads.push_back(static_cast<std::uint32_t>(rng.uniform_u64(n_items)));
    for (const auto item : p.reads)
      if (rng.bernoulli(0.5)) p.writes.push_back(item);
    p.commits = rng.bernoulli(0.8);
    plans.push_back(std::move(p));
  }

  HistoryLog log;
  SimTime t = 0;
  std::size_t live = plans.size();
  while (live > 0) {
    auto& p = plans[rng.uniform_u64(plans.size())];
    if (p.done) continue;
    if (p.next_read < p.reads.size()) {
      log.record(++t, p.id, EventKind::ReadExec, ItemId{p.reads[p.next_read]});
      ++p.next_read;
      continue;
    }
    if (p.commits) {
      for (const auto item : p.writes)
        log.record(++t, p.id, EventKind::Flush, ItemId{item});
      log.record(++t, p.id, EventKind::Commit);
    } else {
      log.record(++t, p.id, EventKind::Abort);
    }
    p.done = true;
    --live;
  }
  return log.take();
}

TEST(OracleAgreement, TenThousandRandomHistories) {
  Rng rng(777);
  std::size_t serializable = 0, not_serializable = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto h = random_history(rng);
    const bool graph_route = is_acyclic(build_sg(h));
    const bool oracle_route = brute_force_serializable(h);
    ASSERT_EQ(graph_route, oracle_route) << "history #" << i;
    (graph_route ? serializable : not_serializable)++;
  }
  // The generator must exercise both outcomes for the agreement to mean
  // anything.
  EXPECT_GT(serializable, 1000u);
  EXPECT_GT(not_serializable, 1000u);
}

}  // namespace
}  // namespace ppcc
