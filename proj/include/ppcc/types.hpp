#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppcc {

using SimTime = std::int64_t;

/// Thrown when a runtime consistency check fails. These indicate bugs in the
/// protocol or engine, never bad user input.
class InvariantViolation : public std::runtime_error {
 public:
  explicit InvariantViolation(const std::string& msg)
      : std::runtime_error("invariant violation: " + msg) {}
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw InvariantViolation(msg);
}

/// Index of a data item in [0, db_size).
struct ItemId {
  std::uint32_t index = 0;
  auto operator<=>(const ItemId&) const = default;
};

/// Identity of one transaction incarnation. `id` is unique across a run;
/// `incarnation` counts restarts of the same logical transaction.
struct TxnId {
  std::uint64_t id = 0;
  std::uint32_t incarnation = 0;
  auto operator<=>(const TxnId&) const = default;
};

enum class OpKind : std::uint8_t { Read, Write };

struct Operation {
  OpKind kind = OpKind::Read;
  ItemId item;
  auto operator<=>(const Operation&) const = default;
};

inline Operation read_of(std::uint32_t item) { return {OpKind::Read, ItemId{item}}; }
inline Operation write_of(std::uint32_t item) { return {OpKind::Write, ItemId{item}}; }

enum class TxnPhase : std::uint8_t { ReadPhase, WaitToCommit, Committed, Aborted };

enum class PrecedenceClass : std::uint8_t { Independent, Preceding, Preceded };

enum class BlockReason : std::uint8_t { RuleViolation, LockWait, CommitWait };

enum class AbortReason : std::uint8_t {
  LockHolderPrecededByMe = 0,
  BlockTimeout = 1,
  CommitWaitCycle = 2,
  ValidationFailed = 3,
};
inline constexpr std::size_t kAbortReasonCount = 4;

const char* to_string(TxnPhase p);
const char* to_string(PrecedenceClass c);
const char* to_string(BlockReason r);
const char* to_string(AbortReason r);

/// Outcome of one protocol decision procedure. Block carries the reason the
/// transaction must suspend; AbortTxn is terminal for the incarnation.
struct Decision {
  enum class Kind : std::uint8_t { Proceed, Block, AbortTxn };

  Kind kind = Kind::Proceed;
  BlockReason block_reason = BlockReason::LockWait;
  AbortReason abort_reason = AbortReason::BlockTimeout;

  static Decision proceed() { return {}; }
  static Decision block(BlockReason r) {
    Decision d;
    d.kind = Kind::Block;
    d.block_reason = r;
    return d;
  }
  static Decision abort_txn(AbortReason r) {
    Decision d;
    d.kind = Kind::AbortTxn;
    d.abort_reason = r;
    return d;
  }

  bool is_proceed() const { return kind == Kind::Proceed; }
  bool is_block() const { return kind == Kind::Block; }
  bool is_abort() const { return kind == Kind::AbortTxn; }
};

struct BlockedState {
  BlockReason reason = BlockReason::LockWait;
  SimTime since = 0;
};

/// One transaction incarnation's execution state. Writes go to the private
/// workspace and reach the database only at commit; hence write_set is always
/// a subset of read_set under the generated workload.
struct TxnRecord {
  TxnId id;
  TxnPhase phase = TxnPhase::ReadPhase;
  PrecedenceClass pclass = PrecedenceClass::Independent;
  std::set<ItemId> read_set;
  std::set<ItemId> write_set;
  std::set<ItemId> workspace;  // items with a pending private write
  std::vector<Operation> script;
  std::size_t pc = 0;  // index of next operation
  std::optional<BlockedState> blocked;

  bool script_done() const { return pc >= script.size(); }
  const Operation& next_op() const { return script[pc]; }
};

/// Enforces the legal phase transitions:
/// ReadPhase -> WaitToCommit | Aborted, WaitToCommit -> Committed | Aborted.
inline void transition_phase(TxnRecord& t, TxnPhase to) {
  const TxnPhase from = t.phase;
  const bool ok = (from == TxnPhase::ReadPhase &&
                   (to == TxnPhase::WaitToCommit || to == TxnPhase::Aborted)) ||
                  (from == TxnPhase::WaitToCommit &&
                   (to == TxnPhase::Committed || to == TxnPhase::Aborted));
  require(ok, "illegal phase transition");
  t.phase = to;
}

enum class ConflictKind : std::uint8_t { ReadAfterWrite, WriteAfterRead };

/// The would-be precedence edge implied by a RAW or WAR conflict. The reading
/// side always serializes before the writing side under the strict protocol.
struct ConflictReport {
  TxnId reader;  // edge source
  TxnId writer;  // edge target
  ItemId item;
  ConflictKind kind;
};

inline ConflictReport detect_conflict(TxnId reader, TxnId writer, ItemId item,
                                      ConflictKind kind) {
  require(reader != writer, "conflict requires two distinct transactions");
  return ConflictReport{reader, writer, item, kind};
}

inline const char* to_string(TxnPhase p) {
  switch (p) {
    case TxnPhase::ReadPhase: return "ReadPhase";
    case TxnPhase::WaitToCommit: return "WaitToCommit";
    case TxnPhase::Committed: return "Committed";
    case TxnPhase::Aborted: return "Aborted";
  }
  return "?";
}

inline const char* to_string(PrecedenceClass c) {
  switch (c) {
    case PrecedenceClass::Independent: return "Independent";
    case PrecedenceClass::Preceding: return "Preceding";
    case PrecedenceClass::Preceded: return "Preceded";
  }
  return "?";
}

inline const char* to_string(BlockReason r) {
  switch (r) {
    case BlockReason::RuleViolation: return "RuleViolation";
    case BlockReason::LockWait: return "LockWait";
    case BlockReason::CommitWait: return "CommitWait";
  }
  return "?";
}

inline const char* to_string(AbortReason r) {
  switch (r) {
    case AbortReason::LockHolderPrecededByMe: return "LockHolderPrecededByMe";
    case AbortReason::BlockTimeout: return "BlockTimeout";
    case AbortReason::CommitWaitCycle: return "CommitWaitCycle";
    case AbortReason::ValidationFailed: return "ValidationFailed";
  }
  return "?";
}

}  // namespace ppcc
