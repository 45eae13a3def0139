#pragma once
// Experiment harness: runs algorithms over configurations, enforces oracle
// cross-checks, and emits JSONL/CSV records for step-bound validation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spacebound/backtrack.hpp"
#include "spacebound/oracle.hpp"
#include "spacebound/tree.hpp"

namespace spacebound {

enum class Algo { BtDet, BtRand, Select, BB };

const char* algo_name(Algo a);
std::optional<Algo> algo_from_name(const std::string& name);

struct RunConfig {
  Algo algo = Algo::BtDet;
  std::string tree = "fixture:T7";  // family name, fixture:ID, or raw JSON
  std::uint64_t tree_seed = 1;
  int height = 20;
  double rho = 0.45;

  int p = 2;
  std::vector<std::uint64_t> trial_seeds;  // explicit machine seeds
  int trials = 1;                          // used when trial_seeds is empty
  std::uint64_t base_seed = 1;

  int dd_mult = 8;      // deterministic delta_d = dd_mult * ceil(log2 p)
  int rand_delta_d = 8; // randomized delta_d
  int kappa = 2;
  int space_budget = kDefaultSpaceBudget;

  std::uint64_t select_n = 8;
  int select_h = 4;

  bool oracle_check = false;
  bool check_invariants = false;
  std::string format = "jsonl";  // jsonl | csv
  std::string diagnose_node;     // path string like "LRL"
  bool emit_trace = false;
};

// Builds the tree model a config names. Throws std::invalid_argument on a
// malformed descriptor.
TreeModel model_from_config(const RunConfig& cfg);

std::vector<std::uint64_t> effective_seeds(const RunConfig& cfg);

struct TrialResult {
  bool ok = true;
  std::string error;
  std::uint64_t machine_seed = 0;
  std::uint64_t steps_total = 0;
  int max_words = 0;
  std::uint64_t full_epochs = 0;
  std::uint64_t nonfull_epochs = 0;
  std::string summary;             // one record in the configured format
  std::vector<std::string> trace;  // one JSON record per epoch when requested
};

TrialResult run_trial(const RunConfig& cfg, const TreeModel& model, const OracleReport& oracle,
                      std::uint64_t machine_seed);

// Executes every trial, writing summaries to `out` and epoch traces to
// `trace_out` (when non-null). Returns the process exit code: 0 ok,
// 2 config error, 3 verification failure.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream* trace_out,
                std::ostream& err);

constexpr const char* kSummaryCsvHeader =
    "algo,p,n,h,steps_total,max_words,full_epochs,nonfull_epochs,ok";

struct SweepConfig {
  std::vector<Algo> algos{Algo::BtDet, Algo::BtRand};
  std::string family = "complete";  // complete | left-spine | random-full
  int h_min = 10;
  int h_max = 16;
  int p_min = 4;
  int p_max = 256;
  int seeds_per_cell = 1;
  std::uint64_t base_seed = 1;
  std::uint64_t model_seed = 1;
  double rho = 0.45;
  int dd_mult = 8;
  int rand_delta_d = 8;
  int kappa = 2;
  int space_budget = kDefaultSpaceBudget;
};

struct SweepRow {
  Algo algo;
  std::uint64_t n;
  int h;
  int p;
  std::uint64_t seed;
  std::uint64_t steps_total;
  double bound_value;  // n/p + h*log2(p) deterministic, n/p + h randomized
  double ratio;
};

constexpr const char* kSweepCsvHeader = "n,h,p,variant,seed,steps_total,bound_value,ratio";

std::vector<SweepRow> run_sweep(const SweepConfig& cfg);
int sweep_command(const SweepConfig& cfg, std::ostream& out, std::ostream& err);

// The analytic bound expression each variant is compared against.
double bound_expression(Algo algo, std::uint64_t n, int h, int p);

}  // namespace spacebound
