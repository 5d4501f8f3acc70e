#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ppcc/rng.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

struct WorkloadStats {
  std::uint64_t slots = 0;
  std::uint64_t write_draws = 0;
  std::uint64_t fallbacks = 0;  // write drawn with no unwritten read available
};

/// Produces one transaction script. Length is uniform on
/// [mean - half, mean + half]. Each slot is a write with probability
/// write_prob; a write targets a uniformly chosen item this transaction has
/// read but not yet written, and falls back to a read when no such item
/// exists (always the case for the first slot). Reads pick distinct items
/// uniformly from the database, so a script never re-reads.
inline std::vector<Operation> generate_txn(std::uint32_t db_size,
                                           std::uint32_t size_mean,
                                           std::uint32_t size_half,
                                           double write_prob, Rng& rng,
                                           WorkloadStats* stats = nullptr) {
  const auto length = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(size_mean) - size_half,
      static_cast<std::int64_t>(size_mean) + size_half));
  std::vector<Operation> script;
  script.reserve(length);
  std::vector<std::uint32_t> read_items;
  std::vector<std::uint32_t> unwritten_reads;

  for (std::size_t slot = 0; slot < length; ++slot) {
    if (stats) ++stats->slots;
    const bool want_write = rng.bernoulli(write_prob);
    if (stats && want_write) ++stats->write_draws;
    if (want_write && !unwritten_reads.empty()) {
      const auto pick = rng.uniform_u64(unwritten_reads.size());
      const std::uint32_t item = unwritten_reads[pick];
      unwritten_reads[pick] = unwritten_reads.back();
      unwritten_reads.pop_back();
      script.push_back(write_of(item));
      continue;
    }
    if (want_write && stats) ++stats->fallbacks;
    std::uint32_t item;
    do {
      item = static_cast<std::uint32_t>(rng.uniform_u64(db_size));
    } while (std::find(read_items.begin(), read_items.end(), item) !=
             read_items.end());
    read_items.push_back(item);
    unwritten_reads.push_back(item);
    script.push_back(read_of(item));
  }
  return script;
}

}  // namespace ppcc
