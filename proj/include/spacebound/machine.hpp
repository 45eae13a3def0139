#pragma once
// Step-synchronous simulator of a p-processor distributed-memory machine.
//
// Each lockstep tick a processor may do O(1) local work, send one message of
// at most kPayloadWords words, and receive one message. If two or more
// messages target the same processor in a step, none of them is delivered.
// Collectives are charged primitives: they cost ceil(log2 p)+1 steps and
// return their result to every processor. A space auditor tracks the live
// word count of every processor's algorithm state against a constant budget.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spacebound {

inline constexpr int kPayloadWords = 6;
inline constexpr int kDefaultSpaceBudget = 32;
inline constexpr int kMaxProcessors = 4096;

enum class Phase : int { Traversal = 0, Pairing = 1, Donation = 2, Collective = 3 };

struct Message {
  int src = -1;
  int dst = -1;
  std::uint32_t kind = 0;
  int nwords = 0;
  std::array<std::uint64_t, kPayloadWords> w{};
};

struct Metrics {
  std::uint64_t steps_total = 0;
  std::array<std::uint64_t, 4> steps_by_phase{};  // indexed by Phase
  std::uint64_t epochs_full = 0;
  std::uint64_t epochs_nonfull = 0;
  std::uint64_t node_touches = 0;
  std::uint64_t first_touches = 0;
  std::uint64_t donations_quick = 0;
  std::uint64_t donations_slow_completed = 0;
  std::uint64_t donations_slow_interrupted = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  int max_words_observed = 0;

  Metrics operator-(const Metrics& base) const {
    Metrics d = *this;
    d.steps_total -= base.steps_total;
    for (int i = 0; i < 4; ++i) d.steps_by_phase[i] -= base.steps_by_phase[i];
    d.epochs_full -= base.epochs_full;
    d.epochs_nonfull -= base.epochs_nonfull;
    d.node_touches -= base.node_touches;
    d.first_touches -= base.first_touches;
    d.donations_quick -= base.donations_quick;
    d.donations_slow_completed -= base.donations_slow_completed;
    d.donations_slow_interrupted -= base.donations_slow_interrupted;
    d.messages_sent -= base.messages_sent;
    d.messages_dropped -= base.messages_dropped;
    return d;
  }
};

struct SimError : std::runtime_error {
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};
struct BudgetExceeded : SimError {
  BudgetExceeded(int proc, int words, int budget)
      : SimError("processor " + std::to_string(proc) + " holds " + std::to_string(words) +
                 " words, budget " + std::to_string(budget)) {}
};
struct ContractViolation : SimError {
  explicit ContractViolation(const std::string& what) : SimError(what) {}
};

int ceil_log2(int p);

class Machine {
 public:
  Machine(int p, std::uint64_t seed, int space_budget = kDefaultSpaceBudget);

  int p() const { return p_; }
  int space_budget() const { return space_budget_; }
  std::uint64_t seed() const { return seed_; }
  const Metrics& metrics() const { return metrics_; }
  Metrics& metrics_mut() { return metrics_; }

  void set_phase(Phase ph) { phase_ = ph; }
  Phase phase() const { return phase_; }

  // Advances the machine by one step. Messages staged in the previous step
  // are delivered first (or dropped on collision); the handler then runs for
  // every id in `active` plus every processor that received a message this
  // step. Handler signature: void(int proc, const Message* delivered).
  template <class Handler>
  void lockstep(std::span<const int> active, Handler&& handler) {
    begin_step();
    for (int i : active) {
      if (seen_[i]) continue;
      seen_[i] = 1;
      touched_.push_back(i);
      handler(i, inbox_full_[i] ? &inbox_[i] : nullptr);
    }
    for (int i : delivered_) {
      if (seen_[i]) continue;
      seen_[i] = 1;
      touched_.push_back(i);
      handler(i, &inbox_[i]);
    }
    end_step();
  }

  // Ticks `steps` steps with no processor activity (phase padding).
  void idle_steps(std::uint64_t steps);

  // Valid only inside a lockstep handler; at most one send per processor
  // per step, payload capped at kPayloadWords.
  void send(int src, const Message& m);

  bool has_inflight() const { return !staged_.empty(); }

  // Charged collectives. Every processor contributes one word; the result is
  // known to all processors afterwards. Cost: ceil(log2 p)+1 steps.
  int collective_cost() const { return ceil_log2(p_) + 1; }
  std::vector<std::uint64_t> prefix_sum(std::span<const std::uint64_t> contrib);
  bool all_of(std::span<const std::uint8_t> contrib);
  bool any_of(std::span<const std::uint8_t> contrib);
  std::uint64_t sum(std::span<const std::uint64_t> contrib);
  std::uint64_t max(std::span<const std::uint64_t> contrib);
  // Lowest processor id wins ties.
  std::pair<std::uint64_t, int> min_with_argmin(std::span<const std::uint64_t> contrib);

  void charge(Phase ph, std::uint64_t steps);

  // Per-processor deterministic random streams.
  std::uint64_t rand_u64(int proc);
  std::uint64_t rand_below(int proc, std::uint64_t bound);  // exact uniform on [0,bound)

  // Space audit hook: algorithms report the live word count of a processor's
  // state whenever it changes.
  void observe_words(int proc, int words) {
    if (words > metrics_.max_words_observed) metrics_.max_words_observed = words;
    if (words > space_budget_) throw BudgetExceeded(proc, words, space_budget_);
  }

 private:
  void begin_step();
  void end_step();

  int p_;
  std::uint64_t seed_;
  int space_budget_;
  Phase phase_ = Phase::Traversal;
  Metrics metrics_;

  std::vector<Message> staged_;        // sent this step, delivered next step
  std::vector<std::uint8_t> sent_;     // per-proc sent-this-step flag
  std::vector<Message> inbox_;
  std::vector<std::uint8_t> inbox_full_;
  std::vector<int> delivered_;         // destinations with mail this step
  std::vector<std::uint8_t> seen_;
  std::vector<int> touched_;
  std::vector<int> dst_count_;         // scratch for collision detection
  std::vector<std::uint64_t> rng_;     // per-proc splitmix64 states
  bool in_step_ = false;
};

}  // namespace spacebound
