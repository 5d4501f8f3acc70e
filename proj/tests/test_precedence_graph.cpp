#include "ppcc/precedence_graph.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <vector>

#include "ppcc/rng.hpp"

namespace ppcc {
namespace {

TxnId tx(std::uint64_t id, std::uint32_t inc = 0) { return TxnId{id, inc}; }

TEST(DetectConflict, ReportsReaderBeforeWriter) {
  const auto raw = detect_conflict(tx(2), tx(1), ItemId{0},
                                   ConflictKind::ReadAfterWrite);
  EXPECT_EQ(raw.reader, tx(2));
  EXPECT_EQ(raw.writer, tx(1));
  const auto war = detect_conflict(tx(2), tx(1), ItemId{0},
                                   ConflictKind::WriteAfterRead);
  EXPECT_EQ(war.reader, tx(2));
  EXPECT_EQ(war.writer, tx(1));
}

TEST(DetectConflict, RejectsSelfConflict) {
  EXPECT_THROW(
      detect_conflict(tx(1), tx(1), ItemId{0}, ConflictKind::ReadAfterWrite),
      InvariantViolation);
}

TEST(PrudentRule, EmptyGraphAdmitsAnyFirstEdge) {
  PrecedenceGraph g;
  EXPECT_TRUE(g.rule_allows(tx(1), tx(2)));
  EXPECT_FALSE(g.rule_allows(tx(1), tx(1)));
}

TEST(PrudentRule, PrecedingMayPrecedeAgain) {
  PrecedenceGraph g;
  g.add_precedence(tx(2), tx(1));
  EXPECT_EQ(g.class_of(tx(2)), PrecedenceClass::Preceding);
  EXPECT_TRUE(g.rule_allows(tx(2), tx(3)));
  g.add_precedence(tx(2), tx(3));
  EXPECT_EQ(g.predecessor_count(tx(3)), 1u);
}

TEST(PrudentRule, PrecedingCannotBePreceded) {
  // Example 3 shape: T2 -> T1 exists; T3 wanting T3 -> T2 is refused.
  PrecedenceGraph g;
  g.add_precedence(tx(2), tx(1));
  EXPECT_FALSE(g.rule_allows(tx(3), tx(2)));
}

TEST(PrudentRule, PrecededCannotPrecede) {
  PrecedenceGraph g;
  g.add_precedence(tx(1), tx(2));
  EXPECT_FALSE(g.rule_allows(tx(2), tx(3)));
  EXPECT_THROW(g.add_precedence(tx(2), tx(3)), std::logic_error);
}

TEST(AddPrecedence, SetsClassesAndEdges) {
  PrecedenceGraph g;
  g.add_precedence(tx(2), tx(1));
  EXPECT_TRUE(g.has_edge(tx(2), tx(1)));
  EXPECT_FALSE(g.has_edge(tx(1), tx(2)));
  EXPECT_EQ(g.class_of(tx(2)), PrecedenceClass::Preceding);
  EXPECT_EQ(g.class_of(tx(1)), PrecedenceClass::Preceded);
  EXPECT_EQ(g.edge_count(), 1u);
  g.add_precedence(tx(2), tx(1));  // idempotent
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Predecessors, MatchesInEdges) {
  PrecedenceGraph g;
  g.add_precedence(tx(2), tx(1));
  EXPECT_EQ(g.predecessors(tx(1)), std::set<TxnId>{tx(2)});
  EXPECT_TRUE(g.predecessors(tx(2)).empty());
  EXPECT_TRUE(g.predecessors(tx(99)).empty());
  g.add_precedence(tx(3), tx(1));
  EXPECT_EQ(g.predecessors(tx(1)), (std::set<TxnId>{tx(2), tx(3)}));
}

TEST(RemoveTxn, SoleNodeLeavesEmptyGraph) {
  PrecedenceGraph g;
  g.add_precedence(tx(1), tx(2));
  g.remove_txn(tx(1));
  g.remove_txn(tx(2));
  EXPECT_EQ(g.node_count(), 0u);
  EXPECT_EQ(g.edge_count(), 0u);
  g.remove_txn(tx(2));  // idempotent
}

TEST(RemoveTxn, ClassStickinessSurvivesNeighborRemoval) {
  PrecedenceGraph g;
  g.add_precedence(tx(2), tx(1));
  g.remove_txn(tx(2));
  EXPECT_EQ(g.predecessor_count(tx(1)), 0u);
  EXPECT_EQ(g.class_of(tx(1)), PrecedenceClass::Preceded);
  // Preceded for its entire lifetime: it still cannot precede anyone.
  EXPECT_FALSE(g.rule_allows(tx(1), tx(3)));
}

TEST(RemoveTxn, NewIncarnationStartsIndependent) {
  PrecedenceGraph g;
  g.add_precedence(tx(2, 0), tx(1, 0));
  g.remove_txn(tx(1, 0));
  EXPECT_EQ(g.class_of(tx(1, 1)), PrecedenceClass::Independent);
  EXPECT_TRUE(g.rule_allows(tx(1, 1), tx(3)));
  g.add_precedence(tx(1, 1), tx(3));
  g.assert_valid();
}

// Re-derives classes from the edge set alone (no cached state) and checks
// the rule decision agrees with the two conditions evaluated on them.
void cross_check_against_edges(const PrecedenceGraph& g,
                               const std::vector<TxnId>& txns) {
  std::map<TxnId, PrecedenceClass> derived;
  for (const auto& [from, to] : g.edges()) {
    derived[from] = PrecedenceClass::Preceding;
    derived[to] = PrecedenceClass::Preceded;
  }
  auto cls = [&](TxnId t) {
    auto it = derived.find(t);
    return it == derived.end() ? PrecedenceClass::Independent : it->second;
  };
  for (const TxnId& i : txns) {
    ASSERT_EQ(g.class_of(i), cls(i));
    for (const TxnId& j : txns) {
      if (i == j) continue;
      const bool expected = cls(i) != PrecedenceClass::Preceded &&
                            cls(j) != PrecedenceClass::Preceding;
      ASSERT_EQ(g.rule_allows(i, j), expected);
    }
  }
}

void check_structure(const PrecedenceGraph& g) {
  const auto bad = g.structural_violations();
  ASSERT_TRUE(bad.empty()) << bad.front();
}

// Exhaustive: every insertion sequence of length 4 over all ordered pairs
// of 4 transactions, inserting only what the rule admits. The surviving
// graph must always have Preceding -> Preceded edges only, no directed
// path of two edges, and no cycle.
TEST(PrecedenceGraph, ExhaustiveInsertionSequences) {
  std::vector<TxnId> txns{tx(1), tx(2), tx(3), tx(4)};
  std::vector<std::pair<TxnId, TxnId>> pairs;
  for (const auto& a : txns)
    for (const auto& b : txns)
      if (a != b) pairs.emplace_back(a, b);
  ASSERT_EQ(pairs.size(), 12u);

  std::size_t admitted = 0, refused = 0;
  for (std::size_t s0 = 0; s0 < pairs.size(); ++s0)
    for (std::size_t s1 = 0; s1 < pairs.size(); ++s1)
      for (std::size_t s2 = 0; s2 < pairs.size(); ++s2)
        for (std::size_t s3 = 0; s3 < pairs.size(); ++s3) {
          PrecedenceGraph g;
          for (const std::size_t step : {s0, s1, s2, s3}) {
            const auto& [from, to] = pairs[step];
            if (g.rule_allows(from, to)) {
              g.add_precedence(from, to);
              ++admitted;
            } else {
              ++refused;
            }
          }
          check_structure(g);
          cross_check_against_edges(g, txns);
        }
  EXPECT_GT(admitted, 0u);
  EXPECT_GT(refused, 0u);
}

// Long random sequences over 5 transactions with interleaved removals;
// classes must evolve monotonically (Independent -> one class, then fixed).
TEST(PrecedenceGraph, RandomSequencesKeepInvariantsAndMonotoneClasses) {
  Rng rng(2024);
  for (int round = 0; round < 300; ++round) {
    PrecedenceGraph g;
    std::vector<TxnId> txns;
    for (std::uint64_t i = 1; i <= 5; ++i) txns.push_back(tx(i));
    std::map<TxnId, PrecedenceClass> last_class;
    for (int step = 0; step < 40; ++step) {
      const auto a = txns[rng.uniform_u64(txns.size())];
      const auto b = txns[rng.uniform_u64(txns.size())];
      if (rng.bernoulli(0.15)) {
        g.remove_txn(a);
        last_class.erase(a);
        // a fresh incarnation of the same slot
        continue;
      }
      if (a != b && g.rule_allows(a, b)) g.add_precedence(a, b);
      check_structure(g);
      for (const auto& t : txns) {
        const auto now = g.class_of(t);
        auto it = last_class.find(t);
        if (it != last_class.end() &&
            it->second != PrecedenceClass::Independent)
          ASSERT_EQ(now, it->second) << "class changed after first conflict";
        last_class[t] = now;
      }
    }
  }
}

}  // namespace
}  // namespace ppcc
