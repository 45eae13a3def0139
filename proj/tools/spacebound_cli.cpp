// Command-line harness: single runs with oracle cross-checks, and parameter
// sweeps that compare measured step counts against the analytic bounds.
//
//   spacebound run --algo bt-det --tree fixture:T7 --p 2 --oracle-check
//   spacebound sweep --heights 10:14 --ps 4:64 --out sweep.csv
//
// Exit codes: 0 ok, 2 config error, 3 verification failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "spacebound/harness.hpp"

namespace {

bool parse_range(const std::string& text, int& lo, int& hi) {
  std::size_t colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      lo = hi = std::stoi(text);
    } else {
      lo = std::stoi(text.substr(0, colon));
      hi = std::stoi(text.substr(colon + 1));
    }
  } catch (const std::exception&) {
    return false;
  }
  return lo <= hi;
}

bool power_of_two(int p) { return p >= 1 && (p & (p - 1)) == 0; }

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SPACEBOUND_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed SPACEBOUND_SEED\n";
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using spacebound::RunConfig;
  using spacebound::SweepConfig;

  CLI::App app{"spacebound: constant-space parallel tree search on a simulated "
               "message-passing machine"};
  app.require_subcommand(1);

  RunConfig rc;
  rc.base_seed = default_seed();
  std::string algo_name = "bt-det";
  std::string trace_path, out_path;
  std::vector<std::uint64_t> seeds;

  CLI::App* run = app.add_subcommand("run", "run one algorithm configuration");
  run->add_option("--algo", algo_name, "bt-det | bt-rand | select | bb");
  run->add_option("--tree", rc.tree, "complete | left-spine | random-full | fixture:ID | JSON");
  run->add_option("--seed", rc.tree_seed, "tree seed (random-full)");
  run->add_option("--height", rc.height, "tree height cap");
  run->add_option("--rho", rc.rho, "leaf probability (random-full)");
  run->add_option("--p", rc.p, "processor count (power of two)");
  run->add_option("--trials", rc.trials, "number of trials");
  run->add_option("--trial-seeds", seeds, "explicit machine seeds");
  run->add_option("--base-seed", rc.base_seed, "first machine seed when --trial-seeds is unset");
  run->add_option("--dd-mult", rc.dd_mult, "deterministic delta_d multiplier");
  run->add_option("--delta-d", rc.rand_delta_d, "randomized delta_d");
  run->add_option("--kappa", rc.kappa, "delta_t = delta_d / kappa");
  run->add_option("--space-budget", rc.space_budget, "per-processor word budget");
  run->add_option("--select-n", rc.select_n, "selection node bound");
  run->add_option("--select-h", rc.select_h, "selection height bound");
  run->add_option("--format", rc.format, "jsonl | csv");
  run->add_option("--diagnose-node", rc.diagnose_node, "path string; adds per-epoch flags");
  run->add_option("--trace", trace_path, "write per-epoch JSONL trace to this file");
  run->add_option("--out", out_path, "write summaries to this file instead of stdout");
  run->add_flag("--oracle-check", rc.oracle_check, "verify against the sequential oracle");
  run->add_flag("--check-invariants", rc.check_invariants, "per-step state sanity checks");

  SweepConfig sc;
  std::string algos_csv = "bt-det,bt-rand";
  std::string heights = "10:16", ps = "4:256", sweep_out;

  CLI::App* sweep = app.add_subcommand("sweep", "grid of runs with bound ratios as CSV");
  sweep->add_option("--algos", algos_csv, "comma-separated: bt-det,bt-rand");
  sweep->add_option("--family", sc.family, "complete | left-spine | random-full");
  sweep->add_option("--heights", heights, "height range lo:hi");
  sweep->add_option("--ps", ps, "processor range lo:hi (powers of two)");
  sweep->add_option("--seeds-per-cell", sc.seeds_per_cell, "seeds per cell (randomized)");
  sweep->add_option("--base-seed", sc.base_seed, "first machine seed");
  sweep->add_option("--model-seed", sc.model_seed, "tree seed (random-full)");
  sweep->add_option("--rho", sc.rho, "leaf probability (random-full)");
  sweep->add_option("--dd-mult", sc.dd_mult, "deterministic delta_d multiplier");
  sweep->add_option("--delta-d", sc.rand_delta_d, "randomized delta_d");
  sweep->add_option("--kappa", sc.kappa, "delta_t = delta_d / kappa");
  sweep->add_option("--space-budget", sc.space_budget, "per-processor word budget");
  sweep->add_option("--out", sweep_out, "write the CSV to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (run->parsed()) {
    auto algo = spacebound::algo_from_name(algo_name);
    if (!algo) {
      std::cerr << "unknown algorithm: " << algo_name << "\n";
      return 2;
    }
    rc.algo = *algo;
    rc.trial_seeds = seeds;
    if (!power_of_two(rc.p) || rc.p > spacebound::kMaxProcessors) {
      std::cerr << "p must be a power of two in [1, " << spacebound::kMaxProcessors << "]\n";
      return 2;
    }
    if (rc.trials < 1) {
      std::cerr << "--trials must be positive\n";
      return 2;
    }
    std::ofstream out_file, trace_file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
      out_file.open(out_path);
      if (!out_file) {
        std::cerr << "cannot open " << out_path << "\n";
        return 2;
      }
      out = &out_file;
    }
    std::ostream* trace = nullptr;
    if (!trace_path.empty()) {
      trace_file.open(trace_path);
      if (!trace_file) {
        std::cerr << "cannot open " << trace_path << "\n";
        return 2;
      }
      trace = &trace_file;
      rc.emit_trace = true;
    }
    try {
      return spacebound::run_command(rc, *out, trace, std::cerr);
    } catch (const std::invalid_argument& e) {
      std::cerr << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return 3;
    }
  }

  // sweep
  std::stringstream algos(algos_csv);
  sc.algos.clear();
  std::string tok;
  while (std::getline(algos, tok, ',')) {
    auto a = spacebound::algo_from_name(tok);
    if (!a || (*a != spacebound::Algo::BtDet && *a != spacebound::Algo::BtRand)) {
      std::cerr << "sweep supports bt-det and bt-rand, got: " << tok << "\n";
      return 2;
    }
    sc.algos.push_back(*a);
  }
  if (!parse_range(heights, sc.h_min, sc.h_max) || !parse_range(ps, sc.p_min, sc.p_max) ||
      !power_of_two(sc.p_min) || !power_of_two(sc.p_max)) {
    std::cerr << "malformed --heights or --ps range\n";
    return 2;
  }
  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!sweep_out.empty()) {
    out_file.open(sweep_out);
    if (!out_file) {
      std::cerr << "cannot open " << sweep_out << "\n";
      return 2;
    }
    out = &out_file;
  }
  try {
    return spacebound::sweep_command(sc, *out, std::cerr);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}
