// Command-line front end: run experiment matrices, check history traces for
// serializability, replay the worked schedules, and tune the block quantum.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ppcc/checker.hpp"
#include "ppcc/config.hpp"
#include "ppcc/experiments.hpp"
#include "ppcc/replay.hpp"
#include "ppcc/simengine.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitInvariant = 3;

ppcc::ExperimentMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ppcc::ConfigError("cannot open config file '" + path + "'");
  auto m = ppcc::parse_matrix(in);
  m.check();
  return m;
}

std::string trace_name(const ppcc::MatrixRow& row) {
  std::ostringstream os;
  os << "trace_" << row.group.tag() << "_" << to_string(row.protocol) << "_mpl"
     << row.mpl << "_seed" << row.seed << ".hist";
  return os.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool trace, std::optional<std::uint64_t> seed,
            const std::string& protocol, std::optional<std::uint32_t> mpl,
            unsigned threads) {
  ppcc::ExperimentMatrix m = load_matrix(config_path);
  if (seed) m.seeds = {*seed};
  if (mpl) m.mpl_list = {*mpl};
  if (!protocol.empty()) {
    auto kind = ppcc::protocol_kind_from(protocol);
    if (!kind) throw ppcc::ConfigError("unknown protocol '" + protocol + "'");
    m.protocols = {*kind};
  }
  m.check();
  fs::create_directories(out_dir);
  std::cout << "running " << m.cell_count() << " cells into " << out_dir
            << (trace ? " (tracing)" : "") << "\n";

  std::vector<ppcc::MatrixRow> rows;
  try {
    rows = ppcc::run_matrix(
        m, threads,
        [&](const ppcc::MatrixRow& row, const ppcc::SimConfig& cfg) {
          if (!trace) return;
          ppcc::SimConfig traced = cfg;
          traced.trace = true;
          const auto result = ppcc::run_simulation(traced);
          std::ofstream hist(fs::path(out_dir) / trace_name(row));
          ppcc::write_history(hist, result.history);
        });
  } catch (const ppcc::RunFailure& f) {
    // Reproduce the failing run with tracing so the evidence survives.
    std::string trace_path = "(trace failed)";
    try {
      ppcc::SimConfig traced = f.config;
      traced.trace = true;
      traced.validate = false;
      const auto result = ppcc::run_simulation(traced);
      const auto path = fs::path(out_dir) / "violation.hist";
      std::ofstream hist(path);
      ppcc::write_history(hist, result.history);
      trace_path = path.string();
    } catch (const std::exception&) {
    }
    std::cerr << "invariant violation: " << f.message << "\n"
              << "  seed " << f.config.seed << ", protocol "
              << to_string(f.config.protocol) << ", mpl " << f.config.mpl
              << ", trace " << trace_path << "\n";
    return kExitInvariant;
  }

  for (const auto& g : ppcc::matrix_groups(m)) {
    std::ofstream csv(fs::path(out_dir) / ("detail_" + g.tag() + ".csv"));
    ppcc::write_detail_csv(csv, rows, g);
  }
  const auto summary = ppcc::summarize(rows);
  std::ofstream sum(fs::path(out_dir) / "summary.csv");
  ppcc::write_summary_csv(sum, summary);
  std::cout << "wrote " << ppcc::matrix_groups(m).size()
            << " detail CSVs and summary.csv\n";
  return 0;
}

int cmd_check(const std::string& hist_path) {
  std::ifstream in(hist_path);
  if (!in) {
    std::cerr << "cannot open history file '" << hist_path << "'\n";
    return kExitBadInput;
  }
  const auto events = ppcc::read_history(in);
  const auto sg = ppcc::build_sg(events);
  const bool acyclic = ppcc::is_acyclic(sg);
  std::cout << hist_path << ": " << events.size() << " events, " << sg.size()
            << " committed transactions, " << sg.edge_count()
            << " conflict edges -> "
            << (acyclic ? "serializable" : "NOT serializable") << "\n";
  if (sg.size() <= 8) {
    const bool brute = ppcc::brute_force_serializable(events);
    std::cout << "    brute-force order search: "
              << (brute ? "serializable" : "NOT serializable") << " ("
              << (brute == acyclic ? "agrees" : "DISAGREES")
              << " with the graph test)\n";
    if (brute != acyclic) return kExitInvariant;
  }
  return acyclic ? 0 : 1;
}

int cmd_replay(const std::string& scenario) {
  bool all_ok = true;
  std::vector<std::string> names;
  if (scenario == "all")
    names = ppcc::replay_scenarios();
  else
    names.push_back(scenario);
  for (const auto& name : names) {
    std::cout << name << ":\n";
    const bool ok = ppcc::run_replay_scenario(name, &std::cout);
    std::cout << "  => " << (ok ? "PASS" : "FAIL") << "\n";
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}

int cmd_sweep_quantum(const std::optional<std::string>& config_path,
                      const std::string& out_dir) {
  ppcc::ExperimentMatrix base;
  if (config_path) {
    base = load_matrix(*config_path);
  } else {
    // Base setting: db 500, size 8, write prob 0.2, 4 CPUs / 8 disks.
    base.db_sizes = {500};
    base.txn_sizes = {8};
    base.write_probs = {0.2};
    base.resources = {{4, 8}};
  }
  const auto rows = ppcc::sweep_quantum(base);
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "quantum_sweep.csv");
  csv << "protocol,quantum,peak_committed_mean\n";
  std::map<ppcc::ProtocolKind, ppcc::QuantumRow> best;
  for (const auto& r : rows) {
    csv << to_string(r.protocol) << ',' << r.quantum << ','
        << r.peak_committed_mean << '\n';
    std::cout << to_string(r.protocol) << " quantum " << r.quantum
              << ": peak " << r.peak_committed_mean << "\n";
    auto it = best.find(r.protocol);
    if (it == best.end() || r.peak_committed_mean > it->second.peak_committed_mean)
      best[r.protocol] = r;
  }
  for (const auto& [proto, r] : best)
    std::cout << "best for " << to_string(proto) << ": " << r.quantum << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prudent-precedence concurrency control simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string protocol;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> mpl;
  unsigned threads = 0;
  bool trace = false;

  auto* run = app.add_subcommand("run", "run an experiment matrix");
  run->add_option("--config", config_path, "key = value matrix file")
      ->required()
      ->envname("PPCCSIM_CONFIG");
  run->add_option("--out", out_dir, "output directory")
      ->envname("PPCCSIM_OUT");
  run->add_flag("--trace", trace, "write a history trace per run")
      ->envname("PPCCSIM_TRACE");
  run->add_option("--seed", seed, "restrict the seeds list to one seed")
      ->envname("PPCCSIM_SEED");
  run->add_option("--protocol", protocol, "restrict to one protocol")
      ->envname("PPCCSIM_PROTOCOL");
  run->add_option("--mpl", mpl, "restrict the mpl list to one value")
      ->envname("PPCCSIM_MPL");
  run->add_option("--threads", threads, "worker threads (0 = auto)")
      ->envname("PPCCSIM_THREADS");

  std::string hist_path;
  auto* check = app.add_subcommand(
      "check", "verify a history trace is serializable");
  check->add_option("history", hist_path, "trace file")->required();

  std::string scenario;
  auto* replay = app.add_subcommand(
      "replay", "replay a worked schedule through the protocol");
  replay->add_option("scenario", scenario,
                     "example1 | example2 | example3 | example4 | all")
      ->required();

  std::optional<std::string> sweep_config;
  std::string sweep_out = "out";
  auto* sweep = app.add_subcommand(
      "sweep-quantum", "pick the block quantum at the base setting");
  sweep->add_option("--config", sweep_config, "override the base matrix")
      ->envname("PPCCSIM_CONFIG");
  sweep->add_option("--out", sweep_out, "output directory")
      ->envname("PPCCSIM_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, trace, seed, protocol, mpl,
                     threads);
    if (check->parsed()) return cmd_check(hist_path);
    if (replay->parsed()) return cmd_replay(scenario);
    if (sweep->parsed()) return cmd_sweep_quantum(sweep_config, sweep_out);
  } catch (const ppcc::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const ppcc::MalformedHistory& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const ppcc::InvariantViolation& e) {
    std::cerr << e.what() << "\n";
    return kExitInvariant;
  }
  return 0;
}
