#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "ppcc/protocol.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

/// Optimistic concurrency control with serial backward validation.
/// Accesses never block. At the end of the read phase the transaction
/// validates against every transaction that committed after it started;
/// any read/write intersection aborts it (first committer wins). The
/// driver keeps validation and commit back to back, so the critical
/// section is a single instant of simulated time.
class OccProtocol final : public Protocol {
 public:
  explicit OccProtocol(std::uint32_t db_size) { (void)db_size; }

  ProtocolKind kind() const override { return ProtocolKind::OCC; }

  void begin(TxnRecord& t, SimTime now) override {
    (void)now;
    require(t.phase == TxnPhase::ReadPhase && t.pc == 0,
            "begin() expects a fresh incarnation");
    auto [it, inserted] = meta_.try_emplace(t.id, Meta{commit_counter_});
    require(inserted, "duplicate incarnation");
    (void)it;
  }

  Decision access(TxnRecord& t, const Operation& op, SimTime now) override {
    (void)now;
    require(t.phase == TxnPhase::ReadPhase, "access outside read phase");
    if (op.kind == OpKind::Read) {
      t.read_set.insert(op.item);
    } else {
      t.write_set.insert(op.item);
      t.workspace.insert(op.item);
    }
    return Decision::proceed();
  }

  Decision finish_read_phase(TxnRecord& t, SimTime now) override {
    (void)now;
    const std::uint64_t start = meta_.at(t.id).start_number;
    for (auto it = committed_.rbegin();
         it != committed_.rend() && it->finish_number > start; ++it) {
      for (const ItemId& x : it->writes)
        if (t.read_set.count(x))
          return Decision::abort_txn(AbortReason::ValidationFailed);
    }
    return Decision::proceed();
  }

  void commit(TxnRecord& t, SimTime now) override {
    (void)now;
    if (t.phase == TxnPhase::ReadPhase)
      transition_phase(t, TxnPhase::WaitToCommit);
    transition_phase(t, TxnPhase::Committed);
    committed_.push_back(
        Committed{++commit_counter_,
                  {t.write_set.begin(), t.write_set.end()}});
    meta_.erase(t.id);
    prune();
  }

  void abort(TxnRecord& t, SimTime now) override {
    (void)now;
    transition_phase(t, TxnPhase::Aborted);
    meta_.erase(t.id);
    prune();
  }

  std::uint64_t start_number(TxnId t) const { return meta_.at(t).start_number; }
  std::uint64_t finish_counter() const { return commit_counter_; }

 private:
  struct Meta {
    std::uint64_t start_number;
  };
  struct Committed {
    std::uint64_t finish_number;
    std::vector<ItemId> writes;
  };

  // Committed write sets older than every active transaction's start can
  // never fail a validation again.
  void prune() {
    std::uint64_t min_start = commit_counter_;
    for (const auto& [id, m] : meta_)
      min_start = std::min(min_start, m.start_number);
    while (!committed_.empty() && committed_.front().finish_number <= min_start)
      committed_.pop_front();
  }

  std::map<TxnId, Meta> meta_;
  std::deque<Committed> committed_;
  std::uint64_t commit_counter_ = 0;
};

}  // namespace ppcc
