#include "spacebound/backtrack.hpp"

namespace spacebound {

EpochConfig EpochConfig::deterministic(int p, int dd_mult, int kappa) {
  EpochConfig cfg;
  cfg.variant = Variant::Deterministic;
  int ell = ceil_log2(p) < 1 ? 1 : ceil_log2(p);
  cfg.kappa = kappa;
  cfg.delta_d = dd_mult * ell;
  cfg.delta_t = cfg.delta_d / kappa;
  cfg.delta_p = ceil_log2(p) + 1;
  return cfg;
}

EpochConfig EpochConfig::randomized(int delta_d, int kappa) {
  EpochConfig cfg;
  cfg.variant = Variant::Randomized;
  cfg.kappa = kappa;
  cfg.delta_d = delta_d;
  cfg.delta_t = delta_d / kappa;
  cfg.delta_p = 2;
  return cfg;
}

void EpochConfig::validate() const {
  if (kappa < 2) throw std::invalid_argument("kappa must be at least 2");
  if (delta_t != delta_d / kappa || delta_t < 1)
    throw std::invalid_argument("delta_t must equal floor(delta_d / kappa) and be >= 1");
  if (delta_p < 1) throw std::invalid_argument("delta_p must be positive");
  if (variant == Variant::Randomized && delta_p != 2)
    throw std::invalid_argument("randomized pairing takes exactly 2 steps");
}

EpochCallback deterministic_termination() {
  return [](const EngineView& ev) { return ev.mach->all_of(ev.idle_free_flags); };
}

EpochCallback randomized_termination() {
  // The randomized driver avoids a global synchronization; the simulator
  // detects quiescence omnisciently at zero step cost.
  return [](const EngineView& ev) {
    return ev.busy == 0 && ev.idle_waiting == 0 && !ev.inflight;
  };
}

VisitReport run_deterministic(Machine& mach, const TreeView& view, const EpochConfig& cfg,
                              EngineOptions opt) {
  NullVisitor vis;
  BacktrackEngine<NullVisitor> engine(mach, view, cfg, vis, opt);
  return engine.run(deterministic_termination());
}

VisitReport run_randomized(Machine& mach, const TreeView& view, const EpochConfig& cfg,
                           EngineOptions opt) {
  NullVisitor vis;
  BacktrackEngine<NullVisitor> engine(mach, view, cfg, vis, opt);
  return engine.run(randomized_termination());
}

}  // namespace spacebound
