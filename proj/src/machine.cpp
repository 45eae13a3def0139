#include "spacebound/machine.hpp"

#include <bit>

namespace spacebound {
namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

int ceil_log2(int p) {
  return p <= 1 ? 0 : std::bit_width(static_cast<unsigned>(p - 1));
}

Machine::Machine(int p, std::uint64_t seed, int space_budget)
    : p_(p), seed_(seed), space_budget_(space_budget) {
  if (p < 1 || p > kMaxProcessors || (p & (p - 1)) != 0)
    throw std::invalid_argument("processor count must be a power of two in [1, " +
                                std::to_string(kMaxProcessors) + "]");
  if (space_budget < 1) throw std::invalid_argument("space budget must be positive");
  sent_.assign(p_, 0);
  inbox_.resize(p_);
  inbox_full_.assign(p_, 0);
  seen_.assign(p_, 0);
  dst_count_.assign(p_, 0);
  rng_.resize(p_);
  for (int i = 0; i < p_; ++i) rng_[i] = mix64(seed ^ (0xa076bc5c5e4f2b11ull + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ull));
}

void Machine::begin_step() {
  if (in_step_) throw std::logic_error("nested lockstep");
  in_step_ = true;
  delivered_.clear();
  if (staged_.empty()) return;
  // Collision rule: a destination targeted by two or more messages gets none.
  for (const Message& m : staged_) ++dst_count_[m.dst];
  for (const Message& m : staged_) {
    if (dst_count_[m.dst] == 1) {
      inbox_[m.dst] = m;
      inbox_full_[m.dst] = 1;
      delivered_.push_back(m.dst);
    } else {
      ++metrics_.messages_dropped;
    }
  }
  for (const Message& m : staged_) dst_count_[m.dst] = 0;
  staged_.clear();
}

void Machine::end_step() {
  for (int i : touched_) seen_[i] = 0;
  touched_.clear();
  for (int i : delivered_) inbox_full_[i] = 0;
  // staged_ now holds this step's sends; they are delivered at the next
  // begin_step. Clear the one-send-per-step flags.
  for (const Message& m : staged_) sent_[m.src] = 0;
  metrics_.steps_total += 1;
  metrics_.steps_by_phase[static_cast<int>(phase_)] += 1;
  in_step_ = false;
}

void Machine::idle_steps(std::uint64_t steps) {
  for (std::uint64_t s = 0; s < steps; ++s)
    lockstep(std::span<const int>{}, [](int, const Message*) {});
}

void Machine::send(int src, const Message& m) {
  if (!in_step_) throw std::logic_error("send outside lockstep");
  if (m.nwords < 0 || m.nwords > kPayloadWords)
    throw ContractViolation("message payload exceeds " + std::to_string(kPayloadWords) +
                            " words");
  if (m.dst < 0 || m.dst >= p_) throw ContractViolation("message destination out of range");
  if (sent_[src]) throw ContractViolation("processor " + std::to_string(src) +
                                          " emitted two messages in one step");
  sent_[src] = 1;
  Message copy = m;
  copy.src = src;
  staged_.push_back(copy);
  ++metrics_.messages_sent;
}

void Machine::charge(Phase ph, std::uint64_t steps) {
  metrics_.steps_total += steps;
  metrics_.steps_by_phase[static_cast<int>(ph)] += steps;
}

std::vector<std::uint64_t> Machine::prefix_sum(std::span<const std::uint64_t> contrib) {
  charge(Phase::Collective, collective_cost());
  std::vector<std::uint64_t> out(contrib.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    acc += contrib[i];
    out[i] = acc;
  }
  return out;
}

bool Machine::all_of(std::span<const std::uint8_t> contrib) {
  charge(Phase::Collective, collective_cost());
  for (std::uint8_t v : contrib)
    if (!v) return false;
  return true;
}

bool Machine::any_of(std::span<const std::uint8_t> contrib) {
  charge(Phase::Collective, collective_cost());
  for (std::uint8_t v : contrib)
    if (v) return true;
  return false;
}

std::uint64_t Machine::sum(std::span<const std::uint64_t> contrib) {
  charge(Phase::Collective, collective_cost());
  std::uint64_t acc = 0;
  for (std::uint64_t v : contrib) acc += v;
  return acc;
}

std::uint64_t Machine::max(std::span<const std::uint64_t> contrib) {
  charge(Phase::Collective, collective_cost());
  std::uint64_t best = 0;
  for (std::uint64_t v : contrib)
    if (v > best) best = v;
  return best;
}

std::pair<std::uint64_t, int> Machine::min_with_argmin(std::span<const std::uint64_t> contrib) {
  charge(Phase::Collective, collective_cost());
  std::uint64_t best = ~0ull;
  int arg = -1;
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    if (contrib[i] < best) {
      best = contrib[i];
      arg = static_cast<int>(i);
    }
  }
  return {best, arg};
}

std::uint64_t Machine::rand_u64(int proc) {
  rng_[proc] += 0x9e3779b97f4a7c15ull;
  std::uint64_t x = rng_[proc];
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t Machine::rand_below(int proc, std::uint64_t bound) {
  if (bound == 0) throw std::logic_error("rand_below(0)");
  // Lemire's debiased multiply-shift; exact uniform.
  unsigned __int128 m = static_cast<unsigned __int128>(rand_u64(proc)) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(rand_u64(proc)) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace spacebound
