#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ppcc/types.hpp"

namespace ppcc {

enum class EventKind : std::uint8_t {
  ReadExec,
  WriteExec,
  Flush,
  BeginWaitToCommit,
  Commit,
  Abort,
  Block,
  Wake,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::ReadExec: return "ReadExec";
    case EventKind::WriteExec: return "WriteExec";
    case EventKind::Flush: return "Flush";
    case EventKind::BeginWaitToCommit: return "BeginWaitToCommit";
    case EventKind::Commit: return "Commit";
    case EventKind::Abort: return "Abort";
    case EventKind::Block: return "Block";
    case EventKind::Wake: return "Wake";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from(const std::string& s) {
  for (auto k : {EventKind::ReadExec, EventKind::WriteExec, EventKind::Flush,
                 EventKind::BeginWaitToCommit, EventKind::Commit,
                 EventKind::Abort, EventKind::Block, EventKind::Wake})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

/// One record of the global history. `seq` totally orders events; `time`
/// is the simulation clock and may repeat.
struct HistoryEvent {
  std::uint64_t seq = 0;
  SimTime time = 0;
  TxnId txn;
  EventKind kind = EventKind::ReadExec;
  std::optional<ItemId> item;

  bool operator==(const HistoryEvent&) const = default;
};

inline bool event_kind_needs_item(EventKind k) {
  return k == EventKind::ReadExec || k == EventKind::WriteExec ||
         k == EventKind::Flush;
}

/// Append-only recorder; assigns the global sequence numbers.
class HistoryLog {
 public:
  void record(SimTime time, TxnId txn, EventKind kind,
              std::optional<ItemId> item = std::nullopt) {
    events_.push_back(HistoryEvent{next_seq_++, time, txn, kind, item});
  }

  const std::vector<HistoryEvent>& events() const { return events_; }
  std::vector<HistoryEvent> take() { return std::move(events_); }

  void clear() {
    events_.clear();
    next_seq_ = 0;
  }

 private:
  std::uint64_t next_seq_ = 0;
  std::vector<HistoryEvent> events_;
};

class MalformedHistory : public std::runtime_error {
 public:
  explicit MalformedHistory(const std::string& msg)
      : std::runtime_error("malformed history: " + msg) {}
};

// Trace file format: one event per line,
//   seq time txn_id incarnation kind item
// with `-` for events that carry no item. Lines starting with '#' and blank
// lines are ignored on input.

inline void write_history(std::ostream& os,
                          const std::vector<HistoryEvent>& events) {
  for (const auto& e : events) {
    os << e.seq << ' ' << e.time << ' ' << e.txn.id << ' ' << e.txn.incarnation
       << ' ' << to_string(e.kind) << ' ';
    if (e.item)
      os << e.item->index;
    else
      os << '-';
    os << '\n';
  }
}

inline std::vector<HistoryEvent> read_history(std::istream& is) {
  std::vector<HistoryEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    HistoryEvent e;
    std::string kind, item;
    if (!(ls >> e.seq >> e.time >> e.txn.id >> e.txn.incarnation >> kind >>
          item))
      throw MalformedHistory("line " + std::to_string(lineno) +
                             ": expected 6 fields");
    std::string extra;
    if (ls >> extra)
      throw MalformedHistory("line " + std::to_string(lineno) +
                             ": trailing fields");
    auto k = event_kind_from(kind);
    if (!k)
      throw MalformedHistory("line " + std::to_string(lineno) +
                             ": unknown event kind '" + kind + "'");
    e.kind = *k;
    if (item != "-") {
      try {
        e.item = ItemId{static_cast<std::uint32_t>(std::stoul(item))};
      } catch (const std::exception&) {
        throw MalformedHistory("line " + std::to_string(lineno) +
                               ": bad item field '" + item + "'");
      }
    }
    if (event_kind_needs_item(e.kind) && !e.item)
      throw MalformedHistory("line " + std::to_string(lineno) + ": " + kind +
                             " requires an item");
    events.push_back(e);
  }
  return events;
}

}  // namespace ppcc
