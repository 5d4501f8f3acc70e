#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ppcc/checker.hpp"
#include "ppcc/config.hpp"
#include "ppcc/simengine.hpp"

namespace ppcc {

struct GroupKey {
  std::uint32_t cpus = 0;
  std::uint32_t disks = 0;
  std::uint32_t db_size = 0;
  std::uint32_t txn_size = 0;
  double write_prob = 0.0;

  auto operator<=>(const GroupKey&) const = default;

  std::string tag() const {
    std::ostringstream os;
    os << cpus << "x" << disks << "_db" << db_size << "_ts" << txn_size
       << "_wp" << static_cast<int>(std::llround(write_prob * 100));
    return os.str();
  }
};

struct MatrixRow {
  GroupKey group;
  ProtocolKind protocol = ProtocolKind::PPCC;
  std::uint32_t mpl = 0;
  std::uint64_t seed = 0;  // the seeds-list entry, not the derived cell seed
  RunMetrics metrics;
};

/// Raised when a run trips a runtime invariant; carries enough context to
/// reproduce it.
struct RunFailure {
  std::string message;
  SimConfig config;
  std::string trace_path;  // written when possible
};

/// Seed for one cell. The protocol is deliberately left out so every
/// protocol faces the identical workload in its cell.
inline std::uint64_t cell_seed(std::uint64_t seed, const GroupKey& g,
                               std::uint32_t mpl) {
  return mix64(seed, g.cpus, g.disks, g.db_size, g.txn_size,
               static_cast<std::uint64_t>(std::llround(g.write_prob * 1e6)),
               mpl);
}

inline SimConfig row_config(const ExperimentMatrix& m, const GroupKey& g,
                            ProtocolKind proto, std::uint32_t mpl,
                            std::uint64_t seed) {
  SimConfig c;
  c.protocol = proto;
  c.db_size = g.db_size;
  c.txn_size_mean = g.txn_size;
  c.txn_size_half = m.txn_size_half;
  c.write_prob = g.write_prob;
  c.num_cpus = g.cpus;
  c.num_disks = g.disks;
  c.cpu_burst_mean = m.cpu_burst_mean;
  c.cpu_burst_half = m.cpu_burst_half;
  c.io_mean = m.io_mean;
  c.io_half = m.io_half;
  c.horizon = m.horizon;
  c.mpl = mpl;
  c.block_quantum = proto == ProtocolKind::S2PL ? m.block_quantum_s2pl
                                                : m.block_quantum_ppcc;
  c.restart_delay_adaptive = m.restart_delay_adaptive;
  c.restart_delay_max = m.restart_delay_max;
  c.seed = cell_seed(seed, g, mpl);
  c.validate = m.validate;
  return c;
}

inline std::vector<GroupKey> matrix_groups(const ExperimentMatrix& m) {
  std::vector<GroupKey> groups;
  for (const auto& res : m.resources)
    for (const auto db : m.db_sizes)
      for (const auto ts : m.txn_sizes)
        for (const auto wp : m.write_probs)
          groups.push_back(GroupKey{res.first, res.second, db, ts, wp});
  return groups;
}

/// Runs the whole matrix. Rows come back in a fixed deterministic order
/// regardless of the worker count. `on_row` (optional) observes rows in
/// that order, e.g. to stream trace files.
inline std::vector<MatrixRow> run_matrix(
    const ExperimentMatrix& m, unsigned threads = 0,
    const std::function<void(const MatrixRow&, const SimConfig&)>& on_row =
        {}) {
  m.check();
  struct Job {
    GroupKey group;
    ProtocolKind proto;
    std::uint32_t mpl;
    std::uint64_t seed;
    SimConfig cfg;
  };
  std::vector<Job> jobs;
  for (const auto& g : matrix_groups(m))
    for (const auto proto : m.protocols)
      for (const auto mpl : m.mpl_list)
        for (const auto seed : m.seeds)
          jobs.push_back(
              Job{g, proto, mpl, seed, row_config(m, g, proto, mpl, seed)});

  std::vector<MatrixRow> rows(jobs.size());
  std::vector<std::string> errors(jobs.size());
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  threads = std::min<unsigned>(threads, jobs.size() ? jobs.size() : 1);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      MatrixRow row{job.group, job.proto, job.mpl, job.seed, RunMetrics{}};
      try {
        row.metrics = run_simulation(job.cfg).metrics;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      rows[i] = row;
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i].empty())
      throw RunFailure{errors[i], jobs[i].cfg, ""};
    if (on_row) on_row(rows[i], jobs[i].cfg);
  }
  return rows;
}

// ---- CSV output -----------------------------------------------------------

inline std::string format_write_prob(double wp) {
  std::ostringstream os;
  os << wp;
  return os.str();
}

inline void write_detail_csv(std::ostream& os,
                             const std::vector<MatrixRow>& rows,
                             const GroupKey& group) {
  os << "protocol,mpl,seed,committed,aborts_lock_preceded,aborts_timeout,"
        "aborts_commit_wait_cycle,aborts_validation,restarts,blocks\n";
  for (const auto& r : rows) {
    if (r.group != group) continue;
    os << to_string(r.protocol) << ',' << r.mpl << ',' << r.seed << ','
       << r.metrics.committed << ',' << r.metrics.aborted_by_cause[0] << ','
       << r.metrics.aborted_by_cause[1] << ',' << r.metrics.aborted_by_cause[2]
       << ',' << r.metrics.aborted_by_cause[3] << ',' << r.metrics.restarts
       << ',' << r.metrics.blocks << '\n';
  }
}

struct SummaryRow {
  GroupKey group;
  ProtocolKind protocol;
  std::uint32_t peak_mpl = 0;
  double peak_committed_mean = 0.0;  // max over mpl of mean over seeds
  std::size_t seeds = 0;
};

/// Seed-averaged committed count per (group, protocol, mpl), then the peak
/// across the sweep.
inline std::vector<SummaryRow> summarize(const std::vector<MatrixRow>& rows) {
  std::map<std::tuple<GroupKey, ProtocolKind, std::uint32_t>,
           std::pair<double, std::size_t>>
      cells;
  for (const auto& r : rows) {
    auto& [sum, n] = cells[{r.group, r.protocol, r.mpl}];
    sum += static_cast<double>(r.metrics.committed);
    ++n;
  }
  std::map<std::pair<GroupKey, ProtocolKind>, SummaryRow> best;
  for (const auto& [key, acc] : cells) {
    const auto& [group, proto, mpl] = key;
    const double mean = acc.first / static_cast<double>(acc.second);
    auto& row = best[{group, proto}];
    if (row.seeds == 0 || mean > row.peak_committed_mean) {
      row = SummaryRow{group, proto, mpl, mean, acc.second};
    }
  }
  std::vector<SummaryRow> out;
  out.reserve(best.size());
  for (const auto& [key, row] : best) out.push_back(row);
  return out;
}

inline void write_summary_csv(std::ostream& os,
                              const std::vector<SummaryRow>& summary) {
  os << "cpus,disks,db_size,txn_size,write_prob,protocol,peak_mpl,"
        "peak_committed_mean,seeds\n";
  for (const auto& s : summary) {
    os << s.group.cpus << ',' << s.group.disks << ',' << s.group.db_size << ','
       << s.group.txn_size << ',' << format_write_prob(s.group.write_prob)
       << ',' << to_string(s.protocol) << ',' << s.peak_mpl << ','
       << s.peak_committed_mean << ',' << s.seeds << '\n';
  }
}

// ---- block-quantum tuning sweep -------------------------------------------

struct QuantumRow {
  ProtocolKind protocol;
  SimTime quantum;
  double peak_committed_mean = 0.0;
};

/// Peak throughput per block quantum at one setting (by default the base
/// setting), averaged over the matrix seeds. Used to pick the default.
inline std::vector<QuantumRow> sweep_quantum(
    const ExperimentMatrix& base, const std::vector<SimTime>& quanta = {
                                      50, 100, 200, 400, 800}) {
  std::vector<QuantumRow> out;
  for (const ProtocolKind proto : {ProtocolKind::PPCC, ProtocolKind::S2PL}) {
    for (const SimTime q : quanta) {
      ExperimentMatrix m = base;
      m.protocols = {proto};
      m.block_quantum_ppcc = m.block_quantum_s2pl = q;
      const auto summary = summarize(run_matrix(m));
      double peak = 0.0;
      for (const auto& s : summary)
        peak = std::max(peak, s.peak_committed_mean);
      out.push_back(QuantumRow{proto, q, peak});
    }
  }
  return out;
}

}  // namespace ppcc
