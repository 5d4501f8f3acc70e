#pragma once

#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ppcc/config.hpp"
#include "ppcc/ppcc_protocol.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

/// Drives a PpccProtocol instance through an explicit schedule, one
/// operation at a time, the way the worked examples are narrated. No
/// resources or timing; wakes cascade at the same instant.
class ScriptedPpcc {
 public:
  explicit ScriptedPpcc(std::uint32_t db_size) : protocol_(db_size) {}

  std::size_t add_txn(std::vector<Operation> script) {
    auto& t = txns_.emplace_back();
    t.rec.id = TxnId{next_id_++, 0};
    t.rec.script = std::move(script);
    protocol_.begin(t.rec, now_);
    return txns_.size() - 1;
  }

  /// Attempts the transaction's next scripted operation.
  Decision step(std::size_t i) {
    Txn& t = txns_[i];
    const Operation op = t.rec.next_op();
    const Decision d = protocol_.access(t.rec, op, ++now_);
    apply_op_decision(t, d);
    drain();
    return d;
  }

  /// Ends the read phase: lock acquisition, then commit as soon as nothing
  /// precedes the transaction.
  Decision finish(std::size_t i) {
    Txn& t = txns_[i];
    const Decision d = protocol_.finish_read_phase(t.rec, ++now_);
    apply_finish_decision(t, d);
    drain();
    return d;
  }

  /// Kills the transaction outright (e.g. a driver-level timeout).
  void abort_txn(std::size_t i) {
    Txn& t = txns_[i];
    protocol_.abort(t.rec, ++now_);
    t.stage = Stage::Done;
    drain();
  }

  const TxnRecord& rec(std::size_t i) const { return txns_[i].rec; }
  const PpccProtocol& protocol() const { return protocol_; }
  bool committed(std::size_t i) const {
    return txns_[i].rec.phase == TxnPhase::Committed;
  }
  bool aborted(std::size_t i) const {
    return txns_[i].rec.phase == TxnPhase::Aborted;
  }

 private:
  enum class Stage : std::uint8_t { Scripted, BlockedOnOp, Finishing, Done };

  struct Txn {
    TxnRecord rec;
    Stage stage = Stage::Scripted;
  };

  void apply_op_decision(Txn& t, const Decision& d) {
    if (d.is_proceed()) {
      ++t.rec.pc;
      t.rec.blocked.reset();
      t.stage = Stage::Scripted;
    } else if (d.is_block()) {
      t.rec.blocked = BlockedState{d.block_reason, now_};
      t.stage = Stage::BlockedOnOp;
    } else {
      protocol_.abort(t.rec, now_);
      t.stage = Stage::Done;
    }
  }

  void apply_finish_decision(Txn& t, const Decision& d) {
    if (d.is_proceed()) {
      protocol_.commit(t.rec, now_);
      t.stage = Stage::Done;
    } else if (d.is_block()) {
      t.rec.blocked = BlockedState{d.block_reason, now_};
      t.stage = Stage::Finishing;
    } else {
      protocol_.abort(t.rec, now_);
      t.stage = Stage::Done;
    }
  }

  void drain() {
    for (;;) {
      const auto woken = protocol_.take_woken();
      if (woken.empty()) break;
      for (const TxnId& id : woken) {
        Txn* t = find(id);
        if (!t || t->stage == Stage::Done || t->stage == Stage::Scripted)
          continue;
        if (t->stage == Stage::BlockedOnOp) {
          const Decision d = protocol_.access(t->rec, t->rec.next_op(), now_);
          apply_op_decision(*t, d);
        } else {
          const Decision d = protocol_.finish_read_phase(t->rec, now_);
          apply_finish_decision(*t, d);
        }
      }
    }
  }

  Txn* find(TxnId id) {
    for (auto& t : txns_)
      if (t.rec.id == id) return &t;
    return nullptr;
  }

  PpccProtocol protocol_;
  std::vector<Txn> txns_;
  std::uint64_t next_id_ = 1;
  SimTime now_ = 0;
};

// ---- the worked examples ----------------------------------------------

namespace replay_detail {

class Check {
 public:
  explicit Check(std::ostream* out) : out_(out) {}

  void note(const std::string& line) {
    if (out_) *out_ << "  " << line << "\n";
  }

  void expect(bool cond, const std::string& what) {
    if (out_) *out_ << "  " << (cond ? "ok:   " : "FAIL: ") << what << "\n";
    ok_ = ok_ && cond;
  }

  bool ok() const { return ok_; }

 private:
  std::ostream* out_;
  bool ok_ = true;
};

inline std::string describe(const Decision& d) {
  switch (d.kind) {
    case Decision::Kind::Proceed: return "Proceed";
    case Decision::Kind::Block:
      return std::string("Block(") + to_string(d.block_reason) + ")";
    case Decision::Kind::AbortTxn:
      return std::string("AbortTxn(") + to_string(d.abort_reason) + ")";
  }
  return "?";
}

}  // namespace replay_detail

/// RAW: after W1(a), T2's read of "a" proceeds with precedence T2 -> T1
/// (T2 sees the value before T1's pending write).
inline bool replay_example1(std::ostream* out) {
  replay_detail::Check c(out);
  ScriptedPpcc run(10);
  // items: a=0, b=1, e=2
  const auto t1 = run.add_txn({read_of(1), write_of(0)});
  const auto t2 = run.add_txn({read_of(0), write_of(2)});
  c.expect(run.step(t1).is_proceed(), "R1(b) proceeds");
  c.expect(run.step(t1).is_proceed(), "W1(a) proceeds");
  const Decision d = run.step(t2);
  c.note("R2(a) -> " + replay_detail::describe(d));
  c.expect(d.is_proceed(), "R2(a) proceeds despite T1's pending write");
  c.expect(run.protocol().graph().has_edge(run.rec(t2).id, run.rec(t1).id),
           "precedence T2 -> T1 recorded (T2 read the old value)");
  c.expect(run.rec(t2).pclass == PrecedenceClass::Preceding,
           "T2 is a preceding transaction");
  c.expect(run.rec(t1).pclass == PrecedenceClass::Preceded,
           "T1 is a preceded transaction");
  return c.ok();
}

/// WAR: after R2(a), T1's write of "a" proceeds and produces T2 -> T1.
inline bool replay_example2(std::ostream* out) {
  replay_detail::Check c(out);
  ScriptedPpcc run(10);
  const auto t1 = run.add_txn({read_of(1), write_of(0)});
  const auto t2 = run.add_txn({read_of(0), write_of(2)});
  c.expect(run.step(t1).is_proceed(), "R1(b) proceeds");
  c.expect(run.step(t2).is_proceed(), "R2(a) proceeds");
  const Decision d = run.step(t1);
  c.note("W1(a) -> " + replay_detail::describe(d));
  c.expect(d.is_proceed(), "W1(a) proceeds despite T2's earlier read");
  c.expect(run.protocol().graph().has_edge(run.rec(t2).id, run.rec(t1).id),
           "precedence T2 -> T1 recorded");
  return c.ok();
}

/// A violating transaction: T2 (preceding) cannot be preceded, so R3(e)
/// blocks; once T2 commits, T3 resumes and reads the new value.
inline bool replay_example3(std::ostream* out) {
  replay_detail::Check c(out);
  ScriptedPpcc run(10);
  const auto t1 = run.add_txn({read_of(1), write_of(0)});
  const auto t2 = run.add_txn({read_of(0), write_of(2)});
  const auto t3 = run.add_txn({read_of(2)});
  c.expect(run.step(t1).is_proceed(), "R1(b) proceeds");
  c.expect(run.step(t1).is_proceed(), "W1(a) proceeds");
  c.expect(run.step(t2).is_proceed(), "R2(a) proceeds");
  c.expect(run.protocol().graph().has_edge(run.rec(t2).id, run.rec(t1).id),
           "precedence T2 -> T1 recorded");
  c.expect(run.step(t2).is_proceed(), "W2(e) proceeds");
  const Decision d = run.step(t3);
  c.note("R3(e) -> " + replay_detail::describe(d));
  c.expect(d.is_block() && d.block_reason == BlockReason::RuleViolation,
           "R3(e) suspended: T2, a preceding transaction, cannot be preceded");
  c.expect(run.rec(t3).pclass == PrecedenceClass::Independent,
           "blocked T3 acquires no class");
  // T2 finishes; with no predecessors it commits and releases T3.
  const Decision f2 = run.finish(t2);
  c.note("wc2 -> " + replay_detail::describe(f2));
  c.expect(run.committed(t2), "T2 commits");
  c.expect(run.rec(t3).pc == 1 && !run.rec(t3).blocked,
           "T3 resumed and read the new value of e");
  return c.ok();
}

/// Wait-to-commit and commit: T2 locks its write set and waits on T1; T1's
/// read of a locked item it precedes through aborts T1, and T2 commits.
inline bool replay_example4(std::ostream* out) {
  replay_detail::Check c(out);
  ScriptedPpcc run(10);
  const auto t1 = run.add_txn({read_of(0), read_of(1)});
  const auto t2 = run.add_txn({read_of(1), write_of(0), write_of(1)});
  c.expect(run.step(t1).is_proceed(), "R1(a) proceeds");
  c.expect(run.step(t2).is_proceed(), "R2(b) proceeds");
  c.expect(run.step(t2).is_proceed(), "W2(a) proceeds");
  c.expect(run.protocol().graph().has_edge(run.rec(t1).id, run.rec(t2).id),
           "precedence T1 -> T2 from the earlier R1(a)");
  c.expect(run.step(t2).is_proceed(), "W2(b) proceeds");
  const Decision f2 = run.finish(t2);
  c.note("[wc2] -> " + replay_detail::describe(f2));
  c.expect(f2.is_block() && f2.block_reason == BlockReason::CommitWait,
           "T2 locked {a, b} and waits for its preceding transaction T1");
  c.expect(run.rec(t2).phase == TxnPhase::WaitToCommit, "T2 in wait-to-commit");
  const Decision d = run.step(t1);
  c.note("R1(b) -> " + replay_detail::describe(d));
  c.expect(d.is_abort() &&
               d.abort_reason == AbortReason::LockHolderPrecededByMe,
           "T1 aborted: b is locked by T2, which T1 precedes");
  c.expect(run.aborted(t1), "abort_1");
  c.expect(run.committed(t2), "no transaction ahead of T2: wc_2 then c_2");
  return c.ok();
}

inline bool run_replay_scenario(const std::string& name, std::ostream* out) {
  if (name == "example1") return replay_example1(out);
  if (name == "example2") return replay_example2(out);
  if (name == "example3") return replay_example3(out);
  if (name == "example4") return replay_example4(out);
  throw ConfigError("unknown replay scenario '" + name +
                    "' (choose example1..example4)");
}

inline const std::vector<std::string>& replay_scenarios() {
  static const std::vector<std::string> names{"example1", "example2",
                                              "example3", "example4"};
  return names;
}

}  // namespace ppcc
