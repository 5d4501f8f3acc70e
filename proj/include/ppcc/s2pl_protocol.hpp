#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ppcc/protocol.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

/// Strict two-phase locking. Reads take shared locks, writes exclusive
/// locks (upgrading a held shared lock); everything is held until commit
/// or abort. Incompatible requests wait in FIFO order and deadlocks are
/// resolved by the driver's block timeout.
class S2plProtocol final : public Protocol {
 public:
  explicit S2plProtocol(std::uint32_t db_size) : locks_(db_size) {}

  ProtocolKind kind() const override { return ProtocolKind::S2PL; }

  void begin(TxnRecord& t, SimTime now) override {
    (void)now;
    require(t.phase == TxnPhase::ReadPhase && t.pc == 0,
            "begin() expects a fresh incarnation");
    auto [it, inserted] = st_.try_emplace(t.id);
    require(inserted, "duplicate incarnation");
    it->second.rec = &t;
  }

  Decision access(TxnRecord& t, const Operation& op, SimTime now) override {
    (void)now;
    require(t.phase == TxnPhase::ReadPhase, "access outside read phase");
    const ItemId x = op.item;
    const Mode want = op.kind == OpKind::Read ? Mode::Shared : Mode::Exclusive;
    if (!holds_at_least(t.id, x, want)) {
      Decision d = request(t.id, x, want);
      if (!d.is_proceed()) return d;
    }
    if (op.kind == OpKind::Read) {
      t.read_set.insert(x);
    } else {
      t.write_set.insert(x);
      t.workspace.insert(x);
    }
    return Decision::proceed();
  }

  Decision finish_read_phase(TxnRecord& t, SimTime now) override {
    (void)now;
    require(t.script_done(), "read phase not finished");
    return Decision::proceed();
  }

  void commit(TxnRecord& t, SimTime now) override {
    (void)now;
    transition_phase(t, TxnPhase::WaitToCommit);
    transition_phase(t, TxnPhase::Committed);
    cleanup(t.id);
  }

  void abort(TxnRecord& t, SimTime now) override {
    (void)now;
    transition_phase(t, TxnPhase::Aborted);
    cleanup(t.id);
  }

  void validate_invariants() const override {
    for (const auto& lk : locks_) {
      require(!(lk.exclusive && !lk.sharers.empty()),
              "shared and exclusive lock coexist");
      if (lk.exclusive) require(lk.sharers.empty(), "exclusive with sharers");
    }
  }

  bool holds_exclusive(TxnId t, ItemId x) const {
    return locks_[x.index].exclusive == t;
  }

 private:
  enum class Mode : std::uint8_t { Shared, Exclusive };

  struct Request {
    TxnId txn;
    Mode mode;
    bool upgrade;
  };

  struct ItemLock {
    std::set<TxnId> sharers;
    std::optional<TxnId> exclusive;
    std::deque<Request> queue;
  };

  struct TxnState {
    TxnRecord* rec = nullptr;
    std::map<ItemId, Mode> held;
    std::optional<ItemId> queued_on;
  };

  bool holds_at_least(TxnId t, ItemId x, Mode want) const {
    auto it = st_.at(t).held.find(x);
    if (it == st_.at(t).held.end()) return false;
    return want == Mode::Shared || it->second == Mode::Exclusive;
  }

  Decision request(TxnId t, ItemId x, Mode want) {
    ItemLock& lk = locks_[x.index];
    TxnState& s = st_.at(t);
    const bool held_shared = s.held.count(x) > 0;

    if (want == Mode::Exclusive && held_shared) {
      // Upgrade jumps the queue only when the requester is the sole holder;
      // waiting here with other sharers is the classic upgrade deadlock,
      // left to the timeout.
      if (lk.sharers.size() == 1 && !lk.exclusive) {
        lk.sharers.erase(t);
        lk.exclusive = t;
        s.held[x] = Mode::Exclusive;
        return Decision::proceed();
      }
      lk.queue.push_back(Request{t, Mode::Exclusive, true});
      s.queued_on = x;
      return Decision::block(BlockReason::LockWait);
    }

    const bool compatible =
        want == Mode::Shared ? !lk.exclusive
                             : (!lk.exclusive && lk.sharers.empty());
    if (compatible && lk.queue.empty()) {
      if (want == Mode::Shared)
        lk.sharers.insert(t);
      else
        lk.exclusive = t;
      s.held[x] = want;
      return Decision::proceed();
    }
    lk.queue.push_back(Request{t, want, false});
    s.queued_on = x;
    return Decision::block(BlockReason::LockWait);
  }

  void cleanup(TxnId t) {
    TxnState& s = st_.at(t);
    if (s.queued_on) {
      auto& q = locks_[s.queued_on->index].queue;
      q.erase(std::remove_if(q.begin(), q.end(),
                             [&](const Request& r) { return r.txn == t; }),
              q.end());
    }
    std::vector<ItemId> held;
    held.reserve(s.held.size());
    for (const auto& [x, mode] : s.held) {
      (void)mode;
      held.push_back(x);
    }
    for (const ItemId& x : held) {
      ItemLock& lk = locks_[x.index];
      lk.sharers.erase(t);
      if (lk.exclusive == t) lk.exclusive.reset();
    }
    st_.erase(t);
    for (const ItemId& x : held) grant_scan(x);
  }

  void grant_scan(ItemId x) {
    ItemLock& lk = locks_[x.index];
    while (!lk.queue.empty()) {
      const Request req = lk.queue.front();
      if (req.upgrade) {
        if (lk.sharers.size() == 1 && lk.sharers.count(req.txn) &&
            !lk.exclusive) {
          lk.queue.pop_front();
          lk.sharers.erase(req.txn);
          lk.exclusive = req.txn;
          st_.at(req.txn).held[x] = Mode::Exclusive;
          st_.at(req.txn).queued_on.reset();
          wake(req.txn);
          continue;
        }
        break;
      }
      if (req.mode == Mode::Shared) {
        if (lk.exclusive) break;
        lk.queue.pop_front();
        lk.sharers.insert(req.txn);
        st_.at(req.txn).held[x] = Mode::Shared;
        st_.at(req.txn).queued_on.reset();
        wake(req.txn);
        continue;
      }
      // Exclusive request
      if (lk.exclusive || !lk.sharers.empty()) break;
      lk.queue.pop_front();
      lk.exclusive = req.txn;
      st_.at(req.txn).held[x] = Mode::Exclusive;
      st_.at(req.txn).queued_on.reset();
      wake(req.txn);
      break;
    }
  }

  std::vector<ItemLock> locks_;
  std::map<TxnId, TxnState> st_;
};

}  // namespace ppcc
