#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ppcc/types.hpp"

namespace ppcc {

/// Precedence graph over uncommitted transactions. An edge (u, v) means
/// "u serializes before v". Admission is gated by the prudent precedence
/// rule, which keeps every precedence path at length one: edge sources are
/// always Preceding, edge targets always Preceded, and a transaction's class
/// is sticky for its whole incarnation even after neighbors are removed.
class PrecedenceGraph {
 public:
  /// The prudent precedence rule, evaluated for a conflict where `reading`
  /// performed the read and `writing` the write. Allowed iff the reading
  /// side has never been preceded and the writing side has never preceded.
  bool rule_allows(TxnId reading, TxnId writing) const {
    if (reading == writing) return false;
    return class_of(reading) != PrecedenceClass::Preceded &&
           class_of(writing) != PrecedenceClass::Preceding;
  }

  /// Inserts edge (reading -> writing). Rejects callers that skipped the
  /// rule test; a rejected conflict must block or abort instead.
  void add_precedence(TxnId reading, TxnId writing) {
    if (!rule_allows(reading, writing))
      throw std::logic_error("add_precedence: prudent precedence rule not satisfied");
    if (has_edge(reading, writing)) return;
    Node& from = nodes_[reading];
    Node& to = nodes_[writing];
    set_class(reading, from, PrecedenceClass::Preceding);
    set_class(writing, to, PrecedenceClass::Preceded);
    from.out.insert(writing);
    to.in.insert(reading);
    // Local structural check: a source never has in-edges, a target never
    // has out-edges, so no path of length >= 2 can form.
    require(from.in.empty() && to.out.empty(),
            "precedence path of length >= 2");
    ++edge_count_;
  }

  bool has_edge(TxnId from, TxnId to) const {
    auto it = nodes_.find(from);
    return it != nodes_.end() && it->second.out.count(to) > 0;
  }

  /// Transactions that must commit before t. Empty set for unknown t.
  std::set<TxnId> predecessors(TxnId t) const {
    auto it = nodes_.find(t);
    if (it == nodes_.end()) return {};
    return it->second.in;
  }

  std::size_t predecessor_count(TxnId t) const {
    auto it = nodes_.find(t);
    return it == nodes_.end() ? 0 : it->second.in.size();
  }

  std::set<TxnId> successors(TxnId t) const {
    auto it = nodes_.find(t);
    if (it == nodes_.end()) return {};
    return it->second.out;
  }

  /// Removes t and all incident edges. Neighbors keep their classes; a
  /// later incarnation of the same logical transaction is a new TxnId and
  /// therefore starts Independent. Idempotent.
  void remove_txn(TxnId t) {
    auto it = nodes_.find(t);
    if (it == nodes_.end()) return;
    for (const TxnId& u : it->second.in) {
      auto& out = nodes_[u].out;
      out.erase(t);
      --edge_count_;
    }
    for (const TxnId& v : it->second.out) {
      auto& in = nodes_[v].in;
      in.erase(t);
      --edge_count_;
    }
    nodes_.erase(it);
  }

  PrecedenceClass class_of(TxnId t) const {
    auto it = nodes_.find(t);
    return it == nodes_.end() ? PrecedenceClass::Independent : it->second.cls;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  std::vector<std::pair<TxnId, TxnId>> edges() const {
    std::vector<std::pair<TxnId, TxnId>> out;
    out.reserve(edge_count_);
    for (const auto& [id, node] : nodes_)
      for (const TxnId& v : node.out) out.emplace_back(id, v);
    return out;
  }

  /// Full structural audit: every edge runs Preceding -> Preceded, no node
  /// has both in- and out-edges (hence no path of length >= 2 and no cycle),
  /// and edge mirrors agree. Returns human-readable violations.
  std::vector<std::string> structural_violations() const {
    std::vector<std::string> bad;
    for (const auto& [id, node] : nodes_) {
      if (!node.in.empty() && !node.out.empty())
        bad.push_back("node has both predecessors and successors");
      if (!node.out.empty() && node.cls != PrecedenceClass::Preceding)
        bad.push_back("edge source not Preceding");
      if (!node.in.empty() && node.cls != PrecedenceClass::Preceded)
        bad.push_back("edge target not Preceded");
      if (node.in.empty() && node.out.empty() &&
          node.cls == PrecedenceClass::Independent)
        bad.push_back("Independent node retained in graph");
      for (const TxnId& v : node.out) {
        if (v == id) bad.push_back("self edge");
        auto it = nodes_.find(v);
        if (it == nodes_.end() || !it->second.in.count(id))
          bad.push_back("edge mirror missing");
      }
    }
    if (has_cycle()) bad.push_back("cycle");
    return bad;
  }

  /// Direct cycle search, independent of the path-length argument.
  bool has_cycle() const {
    std::map<TxnId, int> color;  // 0 white, 1 gray, 2 black
    for (const auto& [id, node] : nodes_) {
      (void)node;
      if (color[id] != 0) continue;
      std::vector<std::pair<TxnId, bool>> stack{{id, false}};
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
        for (const TxnId& next : nodes_.at(cur).out) {
          if (color[next] == 1) return true;
          if (color[next] == 0) stack.emplace_back(next, false);
        }
      }
    }
    return false;
  }

  void assert_valid() const {
    auto bad = structural_violations();
    if (!bad.empty()) throw InvariantViolation("precedence graph: " + bad.front());
  }

 private:
  struct Node {
    PrecedenceClass cls = PrecedenceClass::Independent;
    std::set<TxnId> in;
    std::set<TxnId> out;
  };

  void set_class(TxnId id, Node& n, PrecedenceClass cls) {
    if (n.cls == cls) return;
    require(n.cls == PrecedenceClass::Independent,
            "precedence class changed after first conflict");
    n.cls = cls;
    (void)id;
  }

  std::map<TxnId, Node> nodes_;
  std::size_t edge_count_ = 0;
};

}  // namespace ppcc
