#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppcc/types.hpp"

namespace ppcc {

enum class ProtocolKind : std::uint8_t { PPCC, S2PL, OCC };

inline const char* to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::PPCC: return "PPCC";
    case ProtocolKind::S2PL: return "S2PL";
    case ProtocolKind::OCC: return "OCC";
  }
  return "?";
}

inline std::optional<ProtocolKind> protocol_kind_from(const std::string& s) {
  if (s == "PPCC" || s == "ppcc") return ProtocolKind::PPCC;
  if (s == "S2PL" || s == "s2pl" || s == "2PL" || s == "2pl")
    return ProtocolKind::S2PL;
  if (s == "OCC" || s == "occ") return ProtocolKind::OCC;
  return std::nullopt;
}

/// Concurrency-control decision procedures, driven synchronously by a
/// single-threaded driver (the simulation loop, a scripted replay, or a
/// test). Calls never recurse; anything a call makes runnable again is
/// reported through the wake list, which the driver drains after each call.
///
/// Contract with the driver:
///  - begin() is called once per incarnation; the record must stay at a
///    stable address until commit()/abort() for that incarnation returns.
///  - access() decides the transaction's next operation. On Proceed the
///    protocol has applied the operation's effects (read/write sets,
///    workspace); the driver advances the program counter.
///  - finish_read_phase() is called when the script is exhausted and again
///    each time a blocked finisher is woken. Proceed means the transaction
///    is entitled to commit now.
///  - commit()/abort() finalize the incarnation and release its footprint.
class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual ProtocolKind kind() const = 0;

  virtual void begin(TxnRecord& t, SimTime now) = 0;
  virtual Decision access(TxnRecord& t, const Operation& op, SimTime now) = 0;
  virtual Decision finish_read_phase(TxnRecord& t, SimTime now) = 0;
  virtual void commit(TxnRecord& t, SimTime now) = 0;
  virtual void abort(TxnRecord& t, SimTime now) = 0;

  /// Self-audit hook; throws InvariantViolation on failure.
  virtual void validate_invariants() const {}

  /// Whether a lock wait is bounded by the block quantum. Protocols that
  /// resolve lock deadlocks some other way return false.
  virtual bool lock_wait_times_out() const { return true; }

  std::vector<TxnId> take_woken() { return std::exchange(woken_, {}); }

 protected:
  void wake(TxnId t) { woken_.push_back(t); }

 private:
  std::vector<TxnId> woken_;
};

}  // namespace ppcc
