#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "ppcc/config.hpp"
#include "ppcc/history.hpp"
#include "ppcc/occ_protocol.hpp"
#include "ppcc/ppcc_protocol.hpp"
#include "ppcc/rng.hpp"
#include "ppcc/s2pl_protocol.hpp"
#include "ppcc/workload.hpp"

namespace ppcc {

struct RunMetrics {
  std::uint64_t committed = 0;
  std::array<std::uint64_t, kAbortReasonCount> aborted_by_cause{};
  std::uint64_t restarts = 0;
  std::uint64_t blocks = 0;

  std::uint64_t aborts_total() const {
    std::uint64_t n = 0;
    for (auto c : aborted_by_cause) n += c;
    return n;
  }

  bool operator==(const RunMetrics&) const = default;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<HistoryEvent> history;  // populated when tracing
};

inline std::unique_ptr<Protocol> make_protocol(ProtocolKind kind,
                                               std::uint32_t db_size) {
  switch (kind) {
    case ProtocolKind::PPCC: return std::make_unique<PpccProtocol>(db_size);
    case ProtocolKind::S2PL: return std::make_unique<S2plProtocol>(db_size);
    case ProtocolKind::OCC: return std::make_unique<OccProtocol>(db_size);
  }
  throw ConfigError("unknown protocol");
}

/// FIFO single-class service station. Service times are sampled when
/// service starts, so queue order alone fixes the timing.
class ResourcePool {
 public:
  explicit ResourcePool(std::uint32_t servers) : servers_(servers) {}

  bool try_acquire() {
    if (busy_ < servers_) {
      ++busy_;
      return true;
    }
    return false;
  }

  void enqueue(std::uint32_t slot) { waiting_.push_back(slot); }

  std::optional<std::uint32_t> release() {
    require(busy_ > 0, "release of an idle pool");
    --busy_;
    if (waiting_.empty()) return std::nullopt;
    const std::uint32_t next = waiting_.front();
    waiting_.pop_front();
    ++busy_;
    return next;
  }

  std::uint32_t busy() const { return busy_; }
  std::size_t queued() const { return waiting_.size(); }
  std::uint32_t in_station() const {
    return busy_ + static_cast<std::uint32_t>(waiting_.size());
  }

 private:
  std::uint32_t servers_;
  std::uint32_t busy_ = 0;
  std::deque<std::uint32_t> waiting_;
};

/// Closed-system discrete-event simulator: exactly mpl transactions in
/// flight. Every operation costs one CPU burst then one disk access, after
/// which the protocol decides at zero simulated cost; a commit costs one
/// further disk access. Blocked transactions hold no resources. All
/// randomness comes from three named streams split from the seed, so a
/// config determines the run bit for bit.
class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : cfg_(cfg),
        protocol_(make_protocol(cfg.protocol, cfg.db_size)),
        cpu_(cfg.num_cpus),
        disk_(cfg.num_disks),
        workload_rng_(mix64(cfg.seed, kStreamWorkload)),
        delays_rng_(mix64(cfg.seed, kStreamDelays)),
        timing_rng_(mix64(cfg.seed, kStreamTiming)) {
    cfg_.check();
  }

  RunResult run() {
    slots_.resize(cfg_.mpl);  // fixed size: records keep stable addresses
    n_at_cpu_ = static_cast<int>(cfg_.mpl);  // slots default to AtCpu
    for (std::uint32_t s = 0; s < cfg_.mpl; ++s) spawn(s);
    drain();
    maybe_validate();

    while (!events_.empty() && events_.top().time <= cfg_.horizon) {
      const Event ev = events_.top();
      events_.pop();
      require(ev.time >= now_, "event time went backwards");
      now_ = ev.time;
      dispatch(ev);
      drain();
      maybe_validate();
    }

    audit_commit_order();
    RunResult result;
    result.metrics = metrics_;
    if (cfg_.trace) result.history = log_.take();
    return result;
  }

 private:
  enum class EvKind : std::uint8_t {
    CpuDone,
    IoDone,
    TimeoutFired,
    RestartDue,
    CommitRetry,
  };

  struct Event {
    SimTime time = 0;
    std::uint64_t tiebreak = 0;
    EvKind kind = EvKind::CpuDone;
    std::uint32_t slot = 0;
    std::uint64_t tag = 0;  // timeout epoch or incarnation guard

    bool operator>(const Event& o) const {
      return time != o.time ? time > o.time : tiebreak > o.tiebreak;
    }
  };

  enum class SlotState : std::uint8_t {
    AtCpu,           // queued for or using a CPU
    AtDisk,          // queued for or using a disk (operation I/O)
    Blocked,         // suspended mid-script; pending op is script[pc]
    FinishBlocked,   // suspended in lock acquisition or commit wait
    CommitPending,   // commit decision scheduled for this instant
    CommitIo,        // committed; flush I/O draining
    AwaitingRestart, // aborted; restart timer running
  };

  struct Slot {
    TxnRecord rec;
    SlotState state = SlotState::AtCpu;
    std::uint64_t epoch = 0;   // invalidates stale TimeoutFired events
    bool timeout_armed = false;  // a deadline for the pending step is live
    SimTime incarnation_start = 0;
    SimTime txn_start = 0;  // first incarnation's start; restarts keep it
  };

  // ---- transaction lifecycle -------------------------------------------

  void spawn(std::uint32_t s) {
    Slot& slot = slots_[s];
    slot.rec = TxnRecord{};
    slot.rec.id = TxnId{next_txn_id_++, 0};
    slot.rec.script =
        generate_txn(cfg_.db_size, cfg_.txn_size_mean, cfg_.txn_size_half,
                     cfg_.write_prob, workload_rng_);
    slot_of_[slot.rec.id.id] = s;
    ++slot.epoch;
    slot.timeout_armed = false;
    slot.incarnation_start = now_;
    slot.txn_start = now_;
    protocol_->begin(slot.rec, now_);
    set_state(s, SlotState::AtCpu);
    request_cpu(s);
  }

  void restart(std::uint32_t s) {
    Slot& slot = slots_[s];
    const TxnId old = slot.rec.id;
    std::vector<Operation> script = std::move(slot.rec.script);
    slot.rec = TxnRecord{};
    slot.rec.id = TxnId{old.id, old.incarnation + 1};
    slot.rec.script = std::move(script);  // identical operations, fresh state
    ++slot.epoch;
    slot.timeout_armed = false;
    slot.incarnation_start = now_;
    ++metrics_.restarts;
    protocol_->begin(slot.rec, now_);
    set_state(s, SlotState::AtCpu);
    request_cpu(s);
  }

  // ---- resource stations ------------------------------------------------

  SimTime sample_cpu() {
    return timing_rng_.uniform_int(cfg_.cpu_burst_mean - cfg_.cpu_burst_half,
                                   cfg_.cpu_burst_mean + cfg_.cpu_burst_half);
  }
  SimTime sample_io() {
    return timing_rng_.uniform_int(cfg_.io_mean - cfg_.io_half,
                                   cfg_.io_mean + cfg_.io_half);
  }

  void request_cpu(std::uint32_t s) {
    if (cpu_.try_acquire())
      schedule(now_ + sample_cpu(), EvKind::CpuDone, s);
    else
      cpu_.enqueue(s);
  }

  void request_disk(std::uint32_t s) {
    if (disk_.try_acquire())
      schedule(now_ + sample_io(), EvKind::IoDone, s);
    else
      disk_.enqueue(s);
  }

  // ---- event dispatch ----------------------------------------------------

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EvKind::CpuDone: {
        if (auto next = cpu_.release())
          schedule(now_ + sample_cpu(), EvKind::CpuDone, *next);
        set_state(ev.slot, SlotState::AtDisk);
        request_disk(ev.slot);
        break;
      }
      case EvKind::IoDone: {
        if (auto next = disk_.release())
          schedule(now_ + sample_io(), EvKind::IoDone, *next);
        if (slots_[ev.slot].state == SlotState::CommitIo)
          spawn(ev.slot);  // closed system: replacement enters immediately
        else
          decide(ev.slot);
        break;
      }
      case EvKind::TimeoutFired: {
        Slot& slot = slots_[ev.slot];
        if (ev.tag != slot.epoch) break;  // stale
        if (slot.state != SlotState::Blocked &&
            slot.state != SlotState::FinishBlocked)
          break;
        do_abort(ev.slot, AbortReason::BlockTimeout);
        break;
      }
      case EvKind::RestartDue:
        restart(ev.slot);
        break;
      case EvKind::CommitRetry: {
        Slot& slot = slots_[ev.slot];
        require(slot.state == SlotState::CommitPending &&
                    slot.rec.id.incarnation == ev.tag,
                "stale commit retry");
        // Re-run the commit gate at the commit instant; for OCC this is
        // the authoritative validation.
        const Decision d = protocol_->finish_read_phase(slot.rec, now_);
        if (d.is_proceed())
          do_commit(ev.slot);
        else if (d.is_abort())
          do_abort(ev.slot, d.abort_reason);
        else
          enter_blocked(ev.slot, SlotState::FinishBlocked, d.block_reason,
                        std::nullopt);
        break;
      }
    }
  }

  void decide(std::uint32_t s) {
    Slot& slot = slots_[s];
    const Operation op = slot.rec.next_op();
    const Decision d = protocol_->access(slot.rec, op, now_);
    if (d.is_proceed()) {
      record(slot.rec.id,
             op.kind == OpKind::Read ? EventKind::ReadExec
                                     : EventKind::WriteExec,
             op.item);
      ++slot.rec.pc;
      disarm_timeout(s);
      slot.rec.blocked.reset();
      if (!slot.rec.script_done()) {
        set_state(s, SlotState::AtCpu);
        request_cpu(s);
      } else {
        finish_script(s);
      }
    } else if (d.is_block()) {
      enter_blocked(s, SlotState::Blocked, d.block_reason, op.item);
    } else {
      do_abort(s, d.abort_reason);
    }
  }

  void finish_script(std::uint32_t s) {
    Slot& slot = slots_[s];
    const TxnPhase before = slot.rec.phase;
    const Decision d = protocol_->finish_read_phase(slot.rec, now_);
    if (before == TxnPhase::ReadPhase &&
        slot.rec.phase == TxnPhase::WaitToCommit)
      record(slot.rec.id, EventKind::BeginWaitToCommit);
    if (d.is_proceed()) {
      slot.rec.blocked.reset();
      disarm_timeout(s);
      set_state(s, SlotState::CommitPending);
      schedule(now_, EvKind::CommitRetry, s, slot.rec.id.incarnation);
    } else if (d.is_block()) {
      enter_blocked(s, SlotState::FinishBlocked, d.block_reason, std::nullopt);
    } else {
      do_abort(s, d.abort_reason);
    }
  }

  void enter_blocked(std::uint32_t s, SlotState state, BlockReason reason,
                     std::optional<ItemId> item) {
    Slot& slot = slots_[s];
    ++metrics_.blocks;
    record(slot.rec.id, EventKind::Block, item);
    slot.rec.blocked = BlockedState{reason, now_};
    set_state(s, state);
    // Commit waits carry no quantum (predecessors are guaranteed to drain);
    // lock waits only when the protocol relies on timeouts for deadlocks.
    const bool timed =
        reason == BlockReason::RuleViolation ||
        (reason == BlockReason::LockWait && protocol_->lock_wait_times_out());
    if (!timed) {
      disarm_timeout(s);
    } else if (!slot.timeout_armed) {
      // The quantum bounds the total blocked time of the pending step; a
      // wake that re-blocks keeps the original deadline.
      slot.timeout_armed = true;
      schedule(now_ + cfg_.block_quantum, EvKind::TimeoutFired, s, slot.epoch);
    }
  }

  void do_commit(std::uint32_t s) {
    Slot& slot = slots_[s];
    for (const ItemId& x : slot.rec.write_set)
      record(slot.rec.id, EventKind::Flush, x);
    record(slot.rec.id, EventKind::Commit);
    protocol_->commit(slot.rec, now_);
    ++metrics_.committed;
    if (cfg_.validate) commit_order_[slot.rec.id] = metrics_.committed;
    response_sum_ += now_ - slot.txn_start;
    disarm_timeout(s);
    set_state(s, SlotState::CommitIo);
    request_disk(s);
  }

  void do_abort(std::uint32_t s, AbortReason reason) {
    Slot& slot = slots_[s];
    record(slot.rec.id, EventKind::Abort);
    protocol_->abort(slot.rec, now_);
    ++metrics_.aborted_by_cause[static_cast<std::size_t>(reason)];
    disarm_timeout(s);
    slot.rec.blocked.reset();
    set_state(s, SlotState::AwaitingRestart);
    schedule(now_ + delays_rng_.uniform_int(0, restart_delay_bound()),
             EvKind::RestartDue, s);
  }

  /// Restarted work backs off by the prevailing response time, so retries
  /// sit out roughly one transaction lifetime of contention. Before any
  /// commit the analytic no-contention response seeds the average.
  SimTime restart_delay_bound() const {
    if (!cfg_.restart_delay_adaptive) return cfg_.restart_delay_max;
    if (metrics_.committed == 0)
      return static_cast<SimTime>(cfg_.txn_size_mean) *
                 (cfg_.cpu_burst_mean + cfg_.io_mean) +
             cfg_.io_mean;
    return response_sum_ / static_cast<SimTime>(metrics_.committed);
  }

  void drain() {
    for (;;) {
      const std::vector<TxnId> woken = protocol_->take_woken();
      if (woken.empty()) break;
      for (const TxnId& id : woken) process_wake(id);
    }
  }

  void process_wake(TxnId id) {
    auto it = slot_of_.find(id.id);
    if (it == slot_of_.end()) return;
    const std::uint32_t s = it->second;
    Slot& slot = slots_[s];
    if (slot.rec.id != id) return;  // a later incarnation took the slot
    if (slot.state != SlotState::Blocked &&
        slot.state != SlotState::FinishBlocked)
      return;
    record(id, EventKind::Wake);
    slot.rec.blocked.reset();
    if (slot.state == SlotState::Blocked)
      decide(s);
    else
      finish_script(s);
  }

  // ---- bookkeeping -------------------------------------------------------

  void schedule(SimTime time, EvKind kind, std::uint32_t slot,
                std::uint64_t tag = 0) {
    events_.push(Event{time, next_tiebreak_++, kind, slot, tag});
  }

  void record(TxnId txn, EventKind kind,
              std::optional<ItemId> item = std::nullopt) {
    if (cfg_.trace) log_.record(now_, txn, kind, item);
  }

  void disarm_timeout(std::uint32_t s) {
    slots_[s].timeout_armed = false;
    ++slots_[s].epoch;
  }

  void set_state(std::uint32_t s, SlotState state) {
    Slot& slot = slots_[s];
    adjust_stage_count(slot.state, -1);
    slot.state = state;
    adjust_stage_count(slot.state, +1);
  }

  void adjust_stage_count(SlotState state, int delta) {
    if (state == SlotState::AtCpu) n_at_cpu_ += delta;
    if (state == SlotState::AtDisk || state == SlotState::CommitIo)
      n_at_disk_ += delta;
  }

  void maybe_validate() {
    if (!cfg_.validate) return;
    // Conservation: each slot is in exactly one stage (by construction) and
    // resource stations account for exactly the slots standing at them.
    require(n_at_cpu_ >= 0 && cpu_.in_station() ==
                                  static_cast<std::uint32_t>(n_at_cpu_),
            "CPU station does not match slot states");
    require(n_at_disk_ >= 0 && disk_.in_station() ==
                                   static_cast<std::uint32_t>(n_at_disk_),
            "disk station does not match slot states");
    protocol_->validate_invariants();
  }

  /// Committed precedence edges must be honored by commit order.
  void audit_commit_order() {
    if (!cfg_.validate || cfg_.protocol != ProtocolKind::PPCC) return;
    const auto* p = static_cast<const PpccProtocol*>(protocol_.get());
    for (const auto& [from, to] : p->edge_log()) {
      auto fi = commit_order_.find(from);
      auto ti = commit_order_.find(to);
      if (fi == commit_order_.end() || ti == commit_order_.end()) continue;
      require(fi->second < ti->second,
              "precedence edge violated by commit order");
    }
  }

  SimConfig cfg_;
  std::unique_ptr<Protocol> protocol_;
  ResourcePool cpu_;
  ResourcePool disk_;
  Rng workload_rng_;
  Rng delays_rng_;
  Rng timing_rng_;

  std::vector<Slot> slots_;
  std::map<std::uint64_t, std::uint32_t> slot_of_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t next_tiebreak_ = 0;
  std::uint64_t next_txn_id_ = 0;
  SimTime now_ = 0;
  int n_at_cpu_ = 0;
  int n_at_disk_ = 0;

  HistoryLog log_;
  RunMetrics metrics_;
  SimTime response_sum_ = 0;
  std::map<TxnId, std::uint64_t> commit_order_;
};

inline RunResult run_simulation(const SimConfig& cfg) {
  Simulator sim(cfg);
  return sim.run();
}

struct SweepRow {
  ProtocolKind protocol;
  std::uint32_t mpl;
  std::uint64_t seed;
  RunMetrics metrics;
};

/// One run per (protocol, mpl) cell. Cell seeds are derived from the base
/// seed and the mpl only, so every protocol faces the identical workload.
inline std::vector<SweepRow> sweep_mpl(
    const SimConfig& base, const std::vector<ProtocolKind>& protocols,
    const std::vector<std::uint32_t>& mpl_list) {
  if (mpl_list.empty()) throw ConfigError("mpl_list is empty");
  if (protocols.empty()) throw ConfigError("protocols list is empty");
  std::vector<SweepRow> rows;
  rows.reserve(protocols.size() * mpl_list.size());
  for (const ProtocolKind proto : protocols) {
    for (const std::uint32_t mpl : mpl_list) {
      SimConfig cfg = base;
      cfg.protocol = proto;
      cfg.mpl = mpl;
      cfg.seed = mix64(base.seed, mpl);
      cfg.trace = false;
      rows.push_back(SweepRow{proto, mpl, cfg.seed, run_simulation(cfg).metrics});
    }
  }
  return rows;
}

/// Highest committed count per protocol across a sweep.
inline std::map<ProtocolKind, SweepRow> sweep_peaks(
    const std::vector<SweepRow>& rows) {
  std::map<ProtocolKind, SweepRow> peaks;
  for (const auto& row : rows) {
    auto it = peaks.find(row.protocol);
    if (it == peaks.end() || row.metrics.committed > it->second.metrics.committed)
      peaks[row.protocol] = row;
  }
  return peaks;
}

}  // namespace ppcc
