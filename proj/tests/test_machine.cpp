#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "spacebound/machine.hpp"

using namespace spacebound;

namespace {

Message to(int dst, std::uint32_t kind = 1) {
  Message m;
  m.dst = dst;
  m.kind = kind;
  m.nwords = 1;
  m.w[0] = 7;
  return m;
}

}  // namespace

TEST_CASE("collision rule drops all colliding messages") {
  Machine mach(4, 1);
  std::vector<int> everyone{0, 1, 2, 3};
  // P1 and P3 both target P0 in one step
  mach.lockstep(std::span<const int>(everyone), [&](int i, const Message*) {
    if (i == 1 || i == 3) mach.send(i, to(0));
  });
  int delivered = 0;
  mach.lockstep(std::span<const int>(everyone), [&](int, const Message* in) {
    if (in) ++delivered;
  });
  CHECK(delivered == 0);
  CHECK(mach.metrics().messages_dropped == 2);
  CHECK(mach.metrics().messages_sent == 2);
}

TEST_CASE("single message is delivered next step") {
  Machine mach(4, 1);
  std::vector<int> everyone{0, 1, 2, 3};
  mach.lockstep(std::span<const int>(everyone), [&](int i, const Message*) {
    if (i == 2) mach.send(i, to(0, 9));
  });
  int got = -1;
  std::uint32_t kind = 0;
  // the destination is woken even when not in the active set
  mach.lockstep(std::span<const int>{}, [&](int i, const Message* in) {
    if (in) {
      got = i;
      kind = in->kind;
      CHECK(in->src == 2);
    }
  });
  CHECK(got == 0);
  CHECK(kind == 9);
  CHECK(mach.metrics().messages_dropped == 0);
}

TEST_CASE("two sends from one processor in a step violate the contract") {
  Machine mach(2, 1);
  std::vector<int> ids{0};
  CHECK_THROWS_AS(mach.lockstep(std::span<const int>(ids),
                                [&](int i, const Message*) {
                                  mach.send(i, to(1));
                                  mach.send(i, to(1));
                                }),
                  ContractViolation);
}

TEST_CASE("payload cap") {
  Machine mach(2, 1);
  std::vector<int> ids{0};
  Message m = to(1);
  m.nwords = kPayloadWords + 1;
  CHECK_THROWS_AS(
      mach.lockstep(std::span<const int>(ids), [&](int i, const Message*) { mach.send(i, m); }),
      ContractViolation);
}

TEST_CASE("prefix sum matches the charged-cost contract") {
  Machine mach(4, 1);
  std::vector<std::uint64_t> contrib{1, 0, 1, 1};
  std::uint64_t before = mach.metrics().steps_total;
  std::vector<std::uint64_t> out = mach.prefix_sum(contrib);
  CHECK(out == std::vector<std::uint64_t>{1, 1, 2, 3});
  CHECK(mach.metrics().steps_total - before == 3);  // ceil(log2 4) + 1
}

TEST_CASE("and / min-with-argmin collectives") {
  Machine mach(4, 1);
  std::vector<std::uint8_t> all_true{1, 1, 1, 1};
  CHECK(mach.all_of(all_true));
  std::vector<std::uint8_t> one_false{1, 0, 1, 1};
  CHECK_FALSE(mach.all_of(one_false));

  // costs 5@P2, 3@P0, 9@P1, 3@P3: lowest id wins the tie
  std::vector<std::uint64_t> costs{3, 9, 5, 3};
  auto [val, arg] = mach.min_with_argmin(costs);
  CHECK(val == 3);
  CHECK(arg == 0);
}

TEST_CASE("step accounting by phase") {
  Machine mach(8, 1);
  mach.set_phase(Phase::Traversal);
  mach.idle_steps(5);
  mach.set_phase(Phase::Donation);
  mach.idle_steps(2);
  mach.charge(Phase::Pairing, 4);
  CHECK(mach.metrics().steps_by_phase[static_cast<int>(Phase::Traversal)] == 5);
  CHECK(mach.metrics().steps_by_phase[static_cast<int>(Phase::Donation)] == 2);
  CHECK(mach.metrics().steps_by_phase[static_cast<int>(Phase::Pairing)] == 4);
  CHECK(mach.metrics().steps_total == 11);
}

TEST_CASE("space audit") {
  Machine mach(2, 1, 16);
  mach.observe_words(0, 12);
  CHECK(mach.metrics().max_words_observed == 12);
  mach.observe_words(1, 4);
  CHECK(mach.metrics().max_words_observed == 12);
  CHECK_THROWS_AS(mach.observe_words(0, 17), BudgetExceeded);
}

TEST_CASE("per-processor random streams are deterministic and independent") {
  Machine a(4, 99), b(4, 99), c(4, 100);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.rand_u64(i) == b.rand_u64(i));
    CHECK(a.rand_u64(i) == b.rand_u64(i));
  }
  CHECK(a.rand_u64(0) != c.rand_u64(0));
  CHECK(a.rand_u64(0) != a.rand_u64(1));

  // rand_below is exactly bounded
  for (int k = 0; k < 1000; ++k) CHECK(a.rand_below(2, 7) < 7);
}

TEST_CASE("processor count validation") {
  CHECK_THROWS_AS(Machine(3, 1), std::invalid_argument);
  CHECK_THROWS_AS(Machine(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(Machine(8192, 1), std::invalid_argument);
  CHECK_NOTHROW(Machine(1, 1));
  CHECK_NOTHROW(Machine(4096, 1));
}
