#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ppcc/history.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

/// Conflict graph over the committed incarnations of a history. Node i has
/// an edge to node j when some operation of txn i precedes and conflicts
/// with an operation of txn j. Adjacency is a bit matrix; histories from
/// long runs commit thousands of transactions.
class SerializationGraph {
 public:
  explicit SerializationGraph(std::vector<TxnId> txns)
      : txns_(std::move(txns)),
        words_((txns_.size() + 63) / 64),
        adj_(txns_.size() * words_, 0) {}

  std::size_t size() const { return txns_.size(); }
  const std::vector<TxnId>& txns() const { return txns_; }

  void add_edge(std::size_t from, std::size_t to) {
    if (from == to) return;
    adj_[from * words_ + to / 64] |= std::uint64_t{1} << (to % 64);
  }

  bool has_edge(std::size_t from, std::size_t to) const {
    return (adj_[from * words_ + to / 64] >> (to % 64)) & 1;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (auto w : adj_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  std::vector<std::pair<TxnId, TxnId>> edges() const {
    std::vector<std::pair<TxnId, TxnId>> out;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (has_edge(i, j)) out.emplace_back(txns_[i], txns_[j]);
    return out;
  }

  template <typename Fn>
  void for_each_successor(std::size_t from, Fn&& fn) const {
    const std::uint64_t* row = adj_.data() + from * words_;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        const int b = __builtin_ctzll(bits);
        bits &= bits - 1;
        fn(w * 64 + static_cast<std::size_t>(b));
      }
    }
  }

 private:
  std::vector<TxnId> txns_;
  std::size_t words_;
  std::vector<std::uint64_t> adj_;
};

/// Structural checks shared by the checker entry points. Incarnations that
/// never reached a terminal event are allowed (a run may end mid-flight);
/// they are simply not committed.
inline void validate_history(const std::vector<HistoryEvent>& h) {
  std::uint64_t last_seq = 0;
  bool first = true;
  std::map<TxnId, std::pair<bool, bool>> seen;  // txn -> (any event, terminal)
  for (const auto& e : h) {
    if (!first && e.seq <= last_seq)
      throw MalformedHistory("sequence numbers not strictly increasing");
    first = false;
    last_seq = e.seq;
    if (event_kind_needs_item(e.kind) && !e.item)
      throw MalformedHistory(std::string(to_string(e.kind)) +
                             " event without an item");
    auto& [any, terminal] = seen[e.txn];
    if (terminal)
      throw MalformedHistory("event after Commit/Abort of the same incarnation");
    if (e.kind == EventKind::Commit && !any)
      throw MalformedHistory("Commit with no preceding event for the incarnation");
    if (e.kind == EventKind::Commit || e.kind == EventKind::Abort)
      terminal = true;
    any = true;
  }
}

inline std::vector<TxnId> committed_incarnations(
    const std::vector<HistoryEvent>& h) {
  std::vector<TxnId> out;
  for (const auto& e : h)
    if (e.kind == EventKind::Commit) out.push_back(e.txn);
  return out;
}

/// Builds SG_H. The effective operations of a committed transaction are its
/// ReadExec events and its Flush events (the database writes); workspace
/// writes are private and conflict with nothing. Two operations conflict
/// when they touch the same item, come from different transactions, and at
/// least one is a Flush; the edge follows sequence order.
inline SerializationGraph build_sg(const std::vector<HistoryEvent>& h) {
  validate_history(h);
  auto committed = committed_incarnations(h);
  std::map<TxnId, std::size_t> index;
  for (std::size_t i = 0; i < committed.size(); ++i) index[committed[i]] = i;

  SerializationGraph sg(std::move(committed));

  struct ItemOp {
    std::uint32_t txn;
    bool is_write;
  };
  std::map<std::uint32_t, std::vector<ItemOp>> per_item;
  for (const auto& e : h) {
    if (e.kind != EventKind::ReadExec && e.kind != EventKind::Flush) continue;
    auto it = index.find(e.txn);
    if (it == index.end()) continue;  // uncommitted: no effect on SG
    per_item[e.item->index].push_back(
        ItemOp{static_cast<std::uint32_t>(it->second),
               e.kind == EventKind::Flush});
  }

  for (const auto& [item, ops] : per_item) {
    (void)item;
    for (std::size_t j = 1; j < ops.size(); ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        if (ops[i].txn == ops[j].txn) continue;
        if (!ops[i].is_write && !ops[j].is_write) continue;
        sg.add_edge(ops[i].txn, ops[j].txn);
      }
    }
  }
  return sg;
}

/// Iterative three-color depth-first cycle search.
inline bool is_acyclic(const SerializationGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::uint8_t> color(n, 0);  // 0 white, 1 gray, 2 black
  std::vector<std::pair<std::size_t, bool>> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (color[start] != 0) continue;
    stack.emplace_back(start, false);
    while (!stack.empty()) {
      auto [node, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        color[node] = 2;
        continue;
      }
      if (color[node] == 2) continue;
      color[node] = 1;
      stack.emplace_back(node, true);
      bool cyclic = false;
      g.for_each_successor(node, [&](std::size_t next) {
        if (color[next] == 1) cyclic = true;
        if (color[next] == 0) stack.emplace_back(next, false);
      });
      if (cyclic) return false;
    }
  }
  return true;
}

class HistoryTooLarge : public std::runtime_error {
 public:
  HistoryTooLarge()
      : std::runtime_error(
            "brute-force check limited to 8 committed incarnations") {}
};

/// Independent serializability oracle: enumerates candidate serial orders
/// and accepts the history iff some permutation of its committed
/// incarnations orders every conflicting operation pair the same way the
/// history did. Deliberately exhaustive; limited to 8 committed incarnations.
inline bool brute_force_serializable(const std::vector<HistoryEvent>& h) {
  validate_history(h);
  auto committed = committed_incarnations(h);
  const std::size_t n = committed.size();
  if (n > 8) throw HistoryTooLarge();
  if (n <= 1) return true;

  std::map<TxnId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[committed[i]] = i;

  // Ordering constraints re-derived straight from the raw event pairs.
  bool must_precede[8][8] = {};
  for (std::size_t b = 0; b < h.size(); ++b) {
    const auto& later = h[b];
    if (later.kind != EventKind::ReadExec && later.kind != EventKind::Flush)
      continue;
    auto lit = index.find(later.txn);
    if (lit == index.end()) continue;
    for (std::size_t a = 0; a < b; ++a) {
      const auto& earlier = h[a];
      if (earlier.kind != EventKind::ReadExec &&
          earlier.kind != EventKind::Flush)
        continue;
      if (earlier.item->index != later.item->index) continue;
      if (earlier.kind != EventKind::Flush && later.kind != EventKind::Flush)
        continue;
      auto eit = index.find(earlier.txn);
      if (eit == index.end() || eit->second == lit->second) continue;
      must_precede[eit->second][lit->second] = true;
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  do {
    std::size_t pos[8];
    for (std::size_t p = 0; p < n; ++p) pos[order[p]] = p;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = 0; j < n && ok; ++j)
        if (must_precede[i][j] && pos[i] >= pos[j]) ok = false;
    if (ok) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

}  // namespace ppcc
