#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ppcc/precedence_graph.hpp"
#include "ppcc/protocol.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

/// Prudent-precedence concurrency control.
///
/// Read phase: RAW/WAR conflicts proceed when the prudent precedence rule
/// admits the edge; a violating operation blocks in the hope the conflict
/// resolves. Wait-to-commit: the transaction exclusive-locks its write set
/// in ascending item order, then waits until nothing precedes it. Commit:
/// flush, release locks, release everything blocked on the transaction.
class PpccProtocol final : public Protocol {
 public:
  explicit PpccProtocol(std::uint32_t db_size)
      : locks_(db_size), readers_(db_size), writers_(db_size) {}

  ProtocolKind kind() const override { return ProtocolKind::PPCC; }

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
    return op.kind == OpKind::Read ? read_access(t, op.item)
                                   : write_access(t, op.item);
  }

  Decision finish_read_phase(TxnRecord& t, SimTime now) override {
    (void)now;
    require(t.script_done(), "read phase not finished");
    TxnState& s = state(t.id);
    if (!s.acquiring) {
      s.acquiring = true;
      s.commit_items.assign(t.write_set.begin(), t.write_set.end());
    }
    while (s.acquired < s.commit_items.size()) {
      const ItemId x = s.commit_items[s.acquired];
      CommitLock& lk = locks_[x.index];
      if (!lk.holder) {
        lk.holder = t.id;
        ++s.acquired;
      } else if (*lk.holder == t.id) {
        ++s.acquired;  // granted while queued
      } else {
        // Locked-item rule: waiting on a transaction this one precedes
        // would be a circular wait, so abort instead.
        if (graph_.has_edge(t.id, *lk.holder))
          return Decision::abort_txn(AbortReason::LockHolderPrecededByMe);
        if (wait_path_exists(*lk.holder, t.id))
          return Decision::abort_txn(AbortReason::CommitWaitCycle);
        lk.queue.push_back(Waiter{t.id, true});
        s.queued_on = x;
        return Decision::block(BlockReason::LockWait);
      }
    }
    if (t.phase == TxnPhase::ReadPhase) {
      transition_phase(t, TxnPhase::WaitToCommit);
      // Transactions blocked on a rule violation against this one now face
      // a wait-to-commit transaction; they re-evaluate, and the locked-item
      // rule aborts any of them that precede it.
      auto vit = violation_waiters_.find(t.id);
      if (vit != violation_waiters_.end()) {
        const std::set<TxnId> waiters = vit->second;
        for (const TxnId& w : waiters) {
          unregister_violation(w);
          wake(w);
        }
      }
    }
    if (graph_.predecessor_count(t.id) == 0) return Decision::proceed();
    // Entering the commit wait may close a loop through transactions
    // already queued on the locks just acquired.
    for (const TxnId& p : graph_.predecessors(t.id))
      if (wait_path_exists(p, t.id))
        return Decision::abort_txn(AbortReason::CommitWaitCycle);
    return Decision::block(BlockReason::CommitWait);
  }

  void commit(TxnRecord& t, SimTime now) override {
    (void)now;
    require(t.phase == TxnPhase::WaitToCommit, "commit before wait-to-commit");
    const TxnState& s = state(t.id);
    require(s.acquired == s.commit_items.size(), "commit without all locks");
    require(graph_.predecessor_count(t.id) == 0,
            "commit with live predecessors");
    transition_phase(t, TxnPhase::Committed);
    cleanup(t);
  }

  void abort(TxnRecord& t, SimTime now) override {
    (void)now;
    require(t.phase != TxnPhase::Committed, "abort after commit");
    transition_phase(t, TxnPhase::Aborted);
    cleanup(t);
  }

  const PrecedenceGraph& graph() const { return graph_; }

  // Lock waits end when the holder commits; genuine wait cycles are caught
  // up front by wait_path_exists. Only rule-violation blocks need the
  // quantum.
  bool lock_wait_times_out() const override { return false; }

  /// Every admitted edge, in admission order; survives node removal.
  const std::vector<std::pair<TxnId, TxnId>>& edge_log() const {
    return edge_log_;
  }

  void validate_invariants() const override {
    graph_.assert_valid();
    for (const auto& [id, s] : st_) {
      require(s.rec->pclass == graph_.class_of(id), "class mirror out of sync");
      if (s.rec->phase == TxnPhase::WaitToCommit)
        require(s.acquiring && s.acquired == s.commit_items.size(),
                "wait-to-commit without all locks");
    }
    for (const auto& lk : locks_) {
      if (!lk.queue.empty())
        require(lk.holder.has_value(), "waiters on an unheld lock");
      if (lk.holder) {
        const TxnRecord& h = rec(*lk.holder);
        require(h.phase == TxnPhase::WaitToCommit ||
                    (h.phase == TxnPhase::ReadPhase && h.script_done()),
                "commit lock held before the read phase finished");
      }
    }
    require(!has_wait_cycle(), "deadlock among blocked transactions");
  }

 private:
  struct Waiter {
    TxnId txn;
    bool acquirer;  // acquirers take the lock on wake; others re-evaluate
  };

  struct CommitLock {
    std::optional<TxnId> holder;
    std::deque<Waiter> queue;
  };

  struct TxnState {
    TxnRecord* rec = nullptr;
    std::vector<ItemId> commit_items;  // ascending
    std::size_t acquired = 0;          // commit_items[0, acquired) are held
    bool acquiring = false;
    std::optional<ItemId> queued_on;
    std::set<TxnId> violation_blockers;
  };

  Decision read_access(TxnRecord& t, ItemId x) {
    if (t.workspace.count(x)) {
      // Own pending write: sees the private value, no conflict.
      t.read_set.insert(x);
      readers_[x.index].insert(t.id);
      return Decision::proceed();
    }
    if (auto d = locked_item_check(t, x)) return *d;

    const std::set<TxnId>& ws = writers_[x.index];
    if (!ws.empty()) {
      for (const TxnId& w : ws) {
        const auto conflict =
            detect_conflict(t.id, w, x, ConflictKind::ReadAfterWrite);
        if (!graph_.rule_allows(conflict.reader, conflict.writer))
          return violation_decision(t, ws);
      }
      // All counterparties pass, so the edges are added as one batch.
      for (const TxnId& w : ws) add_edge_checked(t.id, w);
    }
    t.read_set.insert(x);
    readers_[x.index].insert(t.id);
    return Decision::proceed();
  }

  Decision write_access(TxnRecord& t, ItemId x) {
    const CommitLock& lk = locks_[x.index];
    if (lk.holder && *lk.holder != t.id) {
      if (graph_.has_edge(t.id, *lk.holder))
        return Decision::abort_txn(AbortReason::LockHolderPrecededByMe);
      // The write lands in the private workspace and builds no dependency
      // on the holder; flush order against it is fixed later by this
      // transaction's own lock acquisition. Only reads must wait here.
    }

    std::vector<TxnId> rs;
    for (const TxnId& r : readers_[x.index])
      if (r != t.id) rs.push_back(r);
    if (!rs.empty()) {
      for (const TxnId& r : rs) {
        const auto conflict =
            detect_conflict(r, t.id, x, ConflictKind::WriteAfterRead);
        if (!graph_.rule_allows(conflict.reader, conflict.writer))
          return violation_decision(t, {rs.begin(), rs.end()});
      }
      for (const TxnId& r : rs) add_edge_checked(r, t.id);
    }
    // A write-after-write against another workspace imposes no precedence;
    // flush order is serialized later by the commit locks.
    t.write_set.insert(x);
    t.workspace.insert(x);
    writers_[x.index].insert(t.id);
    return Decision::proceed();
  }

  /// Figure-3 style gate for any read-phase access to a commit-locked item.
  std::optional<Decision> locked_item_check(TxnRecord& t, ItemId x) {
    CommitLock& lk = locks_[x.index];
    if (!lk.holder || *lk.holder == t.id) return std::nullopt;
    if (graph_.has_edge(t.id, *lk.holder))
      return Decision::abort_txn(AbortReason::LockHolderPrecededByMe);
    if (wait_path_exists(*lk.holder, t.id))
      return Decision::abort_txn(AbortReason::CommitWaitCycle);
    lk.queue.push_back(Waiter{t.id, false});
    state(t.id).queued_on = x;
    return Decision::block(BlockReason::LockWait);
  }

  /// True when `from` transitively waits on `to` through lock waits,
  /// commit waits, or rule-violation blocks. Checked before a new wait is
  /// entered: a hit means the wait could only ever be resolved by an abort,
  /// so the requester aborts now instead of stalling for the quantum.
  bool wait_path_exists(TxnId from, TxnId to) const {
    std::set<TxnId> seen;
    std::vector<TxnId> stack{from};
    while (!stack.empty()) {
      const TxnId cur = stack.back();
      stack.pop_back();
      if (cur == to) return true;
      if (!seen.insert(cur).second) continue;
      auto it = st_.find(cur);
      if (it == st_.end()) continue;
      const TxnState& s = it->second;
      if (s.queued_on) {
        const auto& holder = locks_[s.queued_on->index].holder;
        if (holder) stack.push_back(*holder);
      }
      for (const TxnId& b : s.violation_blockers) stack.push_back(b);
      if (s.rec->phase == TxnPhase::WaitToCommit)
        for (const TxnId& p : graph_.predecessors(cur)) stack.push_back(p);
    }
    return false;
  }

  void add_edge_checked(TxnId reading, TxnId writing) {
    if (graph_.has_edge(reading, writing)) return;
    require(rec(writing).phase == TxnPhase::ReadPhase,
            "wait-to-commit transaction gained a predecessor");
    graph_.add_precedence(reading, writing);
    rec(reading).pclass = graph_.class_of(reading);
    rec(writing).pclass = graph_.class_of(writing);
    edge_log_.emplace_back(reading, writing);
  }

  /// A violating transaction blocks in the hope the conflict clears, which
  /// requires every counterparty to commit or abort first. A counterparty
  /// that itself waits on this transaction (directly or through lock and
  /// commit waits) will never do either, so blocking would stall until the
  /// quantum kills it; abort right away instead.
  Decision violation_decision(TxnRecord& t, const std::set<TxnId>& others) {
    for (const TxnId& u : others)
      if (u != t.id && wait_path_exists(u, t.id))
        return Decision::abort_txn(AbortReason::CommitWaitCycle);
    register_violation(t.id, others);
    return Decision::block(BlockReason::RuleViolation);
  }

  void register_violation(TxnId t, const std::set<TxnId>& counterparties) {
    unregister_violation(t);
    TxnState& s = state(t);
    for (const TxnId& u : counterparties) {
      if (u == t) continue;
      s.violation_blockers.insert(u);
      violation_waiters_[u].insert(t);
    }
  }

  void unregister_violation(TxnId t) {
    TxnState& s = state(t);
    for (const TxnId& u : s.violation_blockers) {
      auto it = violation_waiters_.find(u);
      if (it == violation_waiters_.end()) continue;
      it->second.erase(t);
      if (it->second.empty()) violation_waiters_.erase(it);
    }
    s.violation_blockers.clear();
  }

  void release_lock(ItemId x) {
    CommitLock& lk = locks_[x.index];
    lk.holder.reset();
    while (!lk.queue.empty() && !lk.holder) {
      const Waiter w = lk.queue.front();
      lk.queue.pop_front();
      state(w.txn).queued_on.reset();
      if (w.acquirer) lk.holder = w.txn;
      wake(w.txn);
    }
  }

  void cleanup(TxnRecord& t) {
    const auto succs = graph_.successors(t.id);
    graph_.remove_txn(t.id);

    TxnState& s = state(t.id);
    for (std::size_t i = 0; i < s.acquired; ++i)
      release_lock(s.commit_items[i]);
    if (s.queued_on) {
      auto& q = locks_[s.queued_on->index].queue;
      q.erase(std::remove_if(q.begin(), q.end(),
                             [&](const Waiter& w) { return w.txn == t.id; }),
              q.end());
    }
    for (const ItemId& x : t.read_set) readers_[x.index].erase(t.id);
    for (const ItemId& x : t.workspace) writers_[x.index].erase(t.id);

    unregister_violation(t.id);
    auto vit = violation_waiters_.find(t.id);
    if (vit != violation_waiters_.end()) {
      const std::set<TxnId> waiters = vit->second;
      violation_waiters_.erase(vit);
      for (const TxnId& w : waiters) {
        unregister_violation(w);
        wake(w);
      }
    }
    // Successors that were only waiting on this transaction can commit.
    for (const TxnId& v : succs) {
      auto it = st_.find(v);
      if (it != st_.end() && it->second.rec->phase == TxnPhase::WaitToCommit &&
          graph_.predecessor_count(v) == 0)
        wake(v);
    }
    st_.erase(t.id);
  }

  // Deadlock audit over the waits that carry no timeout: lock waits and
  // commit waits. Rule-violation blocks may form cycles (two writers can
  // block on each other's reads); those are quantum-guarded and resolve by
  // abort, so they are excluded here.
  bool has_wait_cycle() const {
    std::map<TxnId, std::vector<TxnId>> wf;
    for (const auto& [id, s] : st_) {
      if (s.queued_on) {
        const auto& holder = locks_[s.queued_on->index].holder;
        if (holder) wf[id].push_back(*holder);
      }
      if (s.rec->phase != TxnPhase::WaitToCommit) continue;
      for (const TxnId& p : graph_.predecessors(id)) wf[id].push_back(p);
    }
    std::map<TxnId, int> color;
    for (const auto& [start, edges] : wf) {
      (void)edges;
      if (color[start] != 0) continue;
      std::vector<std::pair<TxnId, bool>> stack{{start, false}};
      while (!stack.empty()) {
        auto [cur, expanded] = stack.back();
        stack.pop_back();
        if (expanded) {
          color[cur] = 2;
          continue;
        }
        if (color[cur] == 2) continue;
        color[cur] = 1;
        stack.emplace_back(cur, true);
        auto it = wf.find(cur);
        if (it == wf.end()) {
          color[cur] = 2;
          continue;
        }
        for (const TxnId& next : it->second) {
          if (color[next] == 1) return true;
          if (color[next] == 0) stack.emplace_back(next, false);
        }
      }
    }
    return false;
  }

  TxnState& state(TxnId id) {
    auto it = st_.find(id);
    require(it != st_.end(), "unknown transaction");
    return it->second;
  }
  const TxnState& state(TxnId id) const {
    auto it = st_.find(id);
    require(it != st_.end(), "unknown transaction");
    return it->second;
  }
  TxnRecord& rec(TxnId id) { return *state(id).rec; }
  const TxnRecord& rec(TxnId id) const { return *state(id).rec; }

  PrecedenceGraph graph_;
  std::vector<CommitLock> locks_;
  std::vector<std::set<TxnId>> readers_;
  std::vector<std::set<TxnId>> writers_;
  std::map<TxnId, TxnState> st_;
  std::map<TxnId, std::set<TxnId>> violation_waiters_;
  std::vector<std::pair<TxnId, TxnId>> edge_log_;
};

}  // namespace ppcc
