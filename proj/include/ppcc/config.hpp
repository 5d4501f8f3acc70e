#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ppcc/protocol.hpp"
#include "ppcc/types.hpp"

namespace ppcc {

// Default block quantum, fixed by a pre-release sweep over
// {50, 100, 200, 400, 800} at the base setting (db 500, size 8, write
// prob 0.2, 4 CPUs / 8 disks). Peak throughput there is flat across the
// grid (under 2.5% spread); 100 sits on the plateau and holds up best
// across the other settings.
inline constexpr SimTime kDefaultBlockQuantum = 100;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg)
      : std::runtime_error("config error: " + msg) {}
};

/// Everything one simulation run depends on. Two runs with equal configs
/// produce identical metrics and traces.
struct SimConfig {
  ProtocolKind protocol = ProtocolKind::PPCC;
  std::uint32_t db_size = 500;
  std::uint32_t txn_size_mean = 8;
  std::uint32_t txn_size_half = 4;
  double write_prob = 0.2;
  std::uint32_t num_cpus = 4;
  std::uint32_t num_disks = 8;
  SimTime cpu_burst_mean = 15;
  SimTime cpu_burst_half = 5;
  SimTime io_mean = 35;
  SimTime io_half = 10;
  SimTime horizon = 100000;
  std::uint32_t mpl = 1;
  SimTime block_quantum = kDefaultBlockQuantum;
  // Restart delay: adaptive follows the running average response time of
  // committed incarnations (uniform on [0, 2 x avg]), so retries back off
  // exactly as far as the current contention level demands. A fixed bound
  // uses [0, restart_delay_max] instead.
  bool restart_delay_adaptive = true;
  SimTime restart_delay_max = 100;  // uniform on [0, max] when fixed
  std::uint64_t seed = 1;
  bool trace = false;
  bool validate = true;

  std::optional<std::string> problem() const {
    if (db_size == 0) return "db_size must be positive";
    if (mpl == 0) return "mpl must be >= 1";
    if (txn_size_mean <= txn_size_half || txn_size_mean - txn_size_half == 0)
      return "txn size range must stay positive";
    if (txn_size_mean + txn_size_half > db_size)
      return "transactions larger than the database";
    if (write_prob < 0.0 || write_prob > 1.0)
      return "write_prob must lie in [0, 1]";
    if (num_cpus == 0 || num_disks == 0) return "resource pools must be nonempty";
    if (cpu_burst_mean <= cpu_burst_half || io_mean <= io_half)
      return "service time ranges must stay positive";
    if (horizon <= 0) return "horizon must be positive";
    if (block_quantum <= 0) return "block_quantum must be positive";
    if (restart_delay_max < 0) return "restart delay cannot be negative";
    return std::nullopt;
  }

  void check() const {
    if (auto p = problem()) throw ConfigError(*p);
  }
};

/// Cross-product experiment description, parsed from a flat key=value file.
struct ExperimentMatrix {
  std::vector<ProtocolKind> protocols{ProtocolKind::PPCC, ProtocolKind::S2PL,
                                      ProtocolKind::OCC};
  std::vector<std::uint32_t> db_sizes{100, 500};
  std::vector<std::uint32_t> txn_sizes{8, 16};
  std::vector<double> write_probs{0.2, 0.5};
  std::vector<std::pair<std::uint32_t, std::uint32_t>> resources{{4, 8},
                                                                 {16, 32}};
  std::vector<std::uint32_t> mpl_list{1, 2, 5, 10, 20, 30, 50, 75, 100, 150, 200};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SimTime horizon = 100000;
  SimTime block_quantum_ppcc = kDefaultBlockQuantum;
  SimTime block_quantum_s2pl = kDefaultBlockQuantum;
  bool restart_delay_adaptive = true;
  SimTime restart_delay_max = 100;
  std::uint32_t txn_size_half = 4;
  SimTime cpu_burst_mean = 15;
  SimTime cpu_burst_half = 5;
  SimTime io_mean = 35;
  SimTime io_half = 10;
  bool validate = true;

  std::size_t cell_count() const {
    return protocols.size() * db_sizes.size() * txn_sizes.size() *
           write_probs.size() * resources.size() * mpl_list.size() *
           seeds.size();
  }

  void check() const {
    if (protocols.empty()) throw ConfigError("protocols list is empty");
    if (db_sizes.empty()) throw ConfigError("db_sizes list is empty");
    if (txn_sizes.empty()) throw ConfigError("txn_sizes list is empty");
    if (write_probs.empty()) throw ConfigError("write_probs list is empty");
    if (resources.empty()) throw ConfigError("resources list is empty");
    if (mpl_list.empty()) throw ConfigError("mpl_list is empty");
    if (seeds.empty()) throw ConfigError("seeds list is empty");
    cell_config(0, 0, 0, 0, 0, 0, 0).check();
  }

  SimConfig cell_config(std::size_t proto, std::size_t db, std::size_t ts,
                        std::size_t wp, std::size_t res, std::size_t mpl,
                        std::size_t seed) const {
    SimConfig c;
    c.protocol = protocols[proto];
    c.db_size = db_sizes[db];
    c.txn_size_mean = txn_sizes[ts];
    c.txn_size_half = txn_size_half;
    c.write_prob = write_probs[wp];
    c.num_cpus = resources[res].first;
    c.num_disks = resources[res].second;
    c.cpu_burst_mean = cpu_burst_mean;
    c.cpu_burst_half = cpu_burst_half;
    c.io_mean = io_mean;
    c.io_half = io_half;
    c.horizon = horizon;
    c.mpl = mpl_list[mpl];
    c.block_quantum = protocols[proto] == ProtocolKind::S2PL
                          ? block_quantum_s2pl
                          : block_quantum_ppcc;
    c.restart_delay_adaptive = restart_delay_adaptive;
    c.restart_delay_max = restart_delay_max;
    c.seed = seeds[seed];
    c.validate = validate;
    return c;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

template <typename T>
T parse_num(const std::string& s, const std::string& key) {
  std::istringstream is(s);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof())
    throw ConfigError("bad value '" + s + "' for key '" + key + "'");
  return v;
}

}  // namespace detail

/// Flat key = value format; '#' starts a comment; lists are comma separated;
/// resources are CPU/DISK pairs such as "4/8". Unknown keys are rejected so
/// typos fail loudly.
inline ExperimentMatrix parse_matrix(std::istream& is) {
  ExperimentMatrix m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");

    if (key == "protocols") {
      m.protocols.clear();
      for (const auto& tok : detail::split_list(value)) {
        auto k = protocol_kind_from(tok);
        if (!k) throw ConfigError("unknown protocol '" + tok + "'");
        m.protocols.push_back(*k);
      }
    } else if (key == "db_sizes") {
      m.db_sizes.clear();
      for (const auto& tok : detail::split_list(value))
        m.db_sizes.push_back(detail::parse_num<std::uint32_t>(tok, key));
    } else if (key == "txn_sizes") {
      m.txn_sizes.clear();
      for (const auto& tok : detail::split_list(value))
        m.txn_sizes.push_back(detail::parse_num<std::uint32_t>(tok, key));
    } else if (key == "write_probs") {
      m.write_probs.clear();
      for (const auto& tok : detail::split_list(value))
        m.write_probs.push_back(detail::parse_num<double>(tok, key));
    } else if (key == "resources") {
      m.resources.clear();
      for (const auto& tok : detail::split_list(value)) {
        const auto slash = tok.find('/');
        if (slash == std::string::npos)
          throw ConfigError("resources entries look like 4/8, got '" + tok + "'");
        m.resources.emplace_back(
            detail::parse_num<std::uint32_t>(tok.substr(0, slash), key),
            detail::parse_num<std::uint32_t>(tok.substr(slash + 1), key));
      }
    } else if (key == "mpl_list") {
      m.mpl_list.clear();
      for (const auto& tok : detail::split_list(value))
        m.mpl_list.push_back(detail::parse_num<std::uint32_t>(tok, key));
    } else if (key == "seeds") {
      m.seeds.clear();
      for (const auto& tok : detail::split_list(value))
        m.seeds.push_back(detail::parse_num<std::uint64_t>(tok, key));
    } else if (key == "horizon") {
      m.horizon = detail::parse_num<SimTime>(value, key);
    } else if (key == "block_quantum") {
      m.block_quantum_ppcc = m.block_quantum_s2pl =
          detail::parse_num<SimTime>(value, key);
    } else if (key == "block_quantum_ppcc") {
      m.block_quantum_ppcc = detail::parse_num<SimTime>(value, key);
    } else if (key == "block_quantum_s2pl") {
      m.block_quantum_s2pl = detail::parse_num<SimTime>(value, key);
    } else if (key == "restart_delay_max") {
      m.restart_delay_max = detail::parse_num<SimTime>(value, key);
    } else if (key == "restart_delay") {
      if (value == "adaptive")
        m.restart_delay_adaptive = true;
      else if (value == "fixed")
        m.restart_delay_adaptive = false;
      else
        throw ConfigError("restart_delay must be adaptive or fixed");
    } else if (key == "txn_size_half") {
      m.txn_size_half = detail::parse_num<std::uint32_t>(value, key);
    } else if (key == "cpu_burst_mean") {
      m.cpu_burst_mean = detail::parse_num<SimTime>(value, key);
    } else if (key == "cpu_burst_half") {
      m.cpu_burst_half = detail::parse_num<SimTime>(value, key);
    } else if (key == "io_mean") {
      m.io_mean = detail::parse_num<SimTime>(value, key);
    } else if (key == "io_half") {
      m.io_half = detail::parse_num<SimTime>(value, key);
    } else if (key == "validate") {
      if (value == "on" || value == "true" || value == "1")
        m.validate = true;
      else if (value == "off" || value == "false" || value == "0")
        m.validate = false;
      else
        throw ConfigError("validate must be on/off");
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
  }
  return m;
}

}  // namespace ppcc
