#pragma once
// Constant-space parallel backtrack search over a TreeView.
//
// The computation evolves as a sequence of epochs, each made of a traversal
// phase (busy processors advance at most delta_t depth-first steps), a
// pairing phase (idle processors are matched with busy ones) and a donation
// phase (paired busy processors hand over part of their subtree). A busy
// processor keeps only the constant-word state (r, v, d, t, q):
//
//   r  root of the assigned subtree
//   v  next node to touch in the depth-first exploration
//   d  direction to continue in after touching v
//   t  bottom of the tail, a node on the path from r to v
//   q  right child of r while that subtree is still undonated/unexplored
//
// Donations are quick (hand over the subtree rooted at q) or slow (climb the
// tail, donate the subtree rooted at its middle node, halving the residual
// tail). Slow donations longer than the donation phase are interrupted and
// resumed in later epochs from a constant-word scratch.
//
// The deterministic driver pairs via a charged prefix-style matching and
// detects termination with an AND collective; the randomized driver pairs by
// sending requests to uniformly random processors, relying on the collision
// rule to keep at most one request per busy processor.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "spacebound/machine.hpp"
#include "spacebound/tree.hpp"
#include "spacebound/view.hpp"

namespace spacebound {

enum class Status : std::uint8_t { IdleFree, IdleWaiting, Busy, BusyDonating };
enum class Dir : std::uint8_t { Left, Right, Parent };
enum class DonationStage : std::uint8_t { None, Measuring, Splitting, Scanning, Sending };
enum class Variant { Deterministic, Randomized };

enum MsgKind : std::uint32_t {
  kMsgDonateRoot = 1,  // fresh subtree: handle of its root
  kMsgFree,            // pairing resolved with no donation
  kMsgCase2M,          // slow completion 1/3: middle node m
  kMsgCase2VD,         // slow completion 2/3: v and d
  kMsgCase2T,          // slow completion 3/3: t
  kMsgPairRequest,
  kMsgPairGrant,
};

struct ProcessorState {
  Status status = Status::IdleFree;
  Dir d = Dir::Left;
  int paired_with = -1;
  NodeHandle r, v, t;
  std::optional<NodeHandle> q;

  // Resumable slow-donation scratch, live while a Case 2 climb is underway.
  // m's parent and u's parent (the paper's ell and z) are recomputed in O(1)
  // at completion instead of being stored.
  DonationStage stage = DonationStage::None;
  NodeHandle cursor;
  std::optional<NodeHandle> mid;   // m: middle node of the tail
  std::optional<NodeHandle> turn;  // u: left child closest to r with in-view right sibling
  int send_stage = 0;

  // Recipient-side buffer for the staged slow-completion messages.
  std::optional<NodeHandle> in_m;
  std::optional<NodeHandle> in_v;
  Dir in_d = Dir::Left;

  // Live word count under the audit convention: 4 words per node handle,
  // 1 per scalar, 2 for status+id.
  int words() const {
    switch (status) {
      case Status::IdleFree:
        return 2;
      case Status::IdleWaiting:
        return 2 + 1 + (in_m ? 4 : 0) + (in_v ? 5 : 0);
      default: {
        int w = 2 + 12 + (q ? 4 : 0) + 1 + 1;
        if (stage != DonationStage::None) w += 1 + 4 + (mid ? 4 : 0) + (turn ? 4 : 0) + 1;
        return w;
      }
    }
  }
};

struct EpochConfig {
  Variant variant = Variant::Deterministic;
  int delta_t = 4;
  int delta_p = 2;
  int delta_d = 8;
  int kappa = 2;

  static EpochConfig deterministic(int p, int dd_mult = 8, int kappa = 2);
  static EpochConfig randomized(int delta_d = 8, int kappa = 2);
  void validate() const;
};

struct EpochTrace {
  std::uint64_t epoch = 0;
  int delta_t = 0, delta_p = 0, delta_d = 0;
  int busy = 0, idle_free = 0, idle_waiting = 0;
  bool full = false;
  std::uint64_t donations_quick = 0;
  std::uint64_t donations_slow = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t steps_total = 0;
  bool diag = false;           // diagnostic node flags present
  bool diag_donating = false;  // its special processor completed a donation
  bool diag_preparing = false; // its special processor is mid slow donation
};

struct VisitReport {
  bool completed = false;
  std::uint64_t leaves_reported = 0;
  std::uint64_t leaf_checksum = 0;
  std::vector<NodeHandle> leaves;
  std::uint64_t nodes_first_touched = 0;
  std::uint64_t steps_total = 0;
  std::vector<EpochTrace> trace;
  Metrics metrics;  // this run's delta
};

// Per-processor hooks; kept as a template parameter so the default costs
// nothing. extra_words feeds the space audit for visitor-held state.
struct NullVisitor {
  void on_first_touch(int, const NodeHandle&) {}
  void on_view_leaf(int, const NodeHandle&) {}
  int extra_words(int) const { return 0; }
};

struct EngineView {
  Machine* mach = nullptr;
  int busy = 0;
  int idle_free = 0;
  int idle_waiting = 0;
  bool inflight = false;
  std::span<const std::uint8_t> idle_free_flags;
};

// Returns true to stop the epoch loop.
using EpochCallback = std::function<bool(const EngineView&)>;

EpochCallback deterministic_termination();
EpochCallback randomized_termination();

struct EngineOptions {
  bool check_invariants = false;     // per-step state sanity + halving asserts
  bool track_global_touches = false; // global first-touch partition check
  bool collect_trace = true;
  bool collect_leaves = true;
  std::uint64_t max_steps = 0;       // 0 = unlimited
  std::optional<NodeHandle> diagnose;
};

std::uint64_t node_fingerprint(const NodeHandle& u);  // defined in oracle.cpp

template <class Visitor = NullVisitor>
class BacktrackEngine {
 public:
  BacktrackEngine(Machine& mach, const TreeView& view, const EpochConfig& cfg, Visitor& vis,
                  EngineOptions opt = {})
      : mach_(mach), view_(view), cfg_(cfg), vis_(vis), opt_(opt), st_(mach.p()) {
    cfg_.validate();
    if (cfg_.delta_d < 2)
      throw std::invalid_argument("delta_d must fit a quick donation (send + delivery)");
  }

  VisitReport run(const EpochCallback& stop) {
    start_metrics_ = mach_.metrics();
    init_states();
    std::uint64_t epoch = 0;
    while (!done_early_) {
      Metrics before = mach_.metrics();
      traversal_phase();
      int busy_now = busy_count();
      bool full = cfg_.variant == Variant::Deterministic ? busy_now * 2 >= mach_.p()
                                                         : busy_now * 4 >= mach_.p();
      if (full)
        ++mach_.metrics_mut().epochs_full;
      else
        ++mach_.metrics_mut().epochs_nonfull;
      pairing_phase();
      donation_phase();
      if (opt_.collect_trace) push_trace(epoch, busy_now, full, before);
      if (stop(make_engine_view())) break;
      ++epoch;
      if (opt_.max_steps &&
          mach_.metrics().steps_total - start_metrics_.steps_total > opt_.max_steps)
        throw SimError("backtrack exceeded the configured step limit");
    }
    return finalize();
  }

  // Test access.
  ProcessorState& state(int i) { return st_[i]; }
  const ProcessorState& state(int i) const { return st_[i]; }
  void run_single_traversal_step(int i) { traversal_step(i); }
  void run_traversal_phase_only() { traversal_phase(); }
  void run_pairing_phase_only() { pairing_phase(); }
  void run_donation_phase_only() { donation_phase(); }
  void force_pair(int donor, int recipient) { pair(donor, recipient); }

 private:
  // ---- initialisation -----------------------------------------------------

  void init_states() {
    NodeHandle root = view_.root();
    if (view_.is_leaf(root)) {
      touch(0, root, true);
      report_leaf(0, root);
      done_early_ = true;
      return;
    }
    ProcessorState& s = st_[0];
    s.status = Status::Busy;
    s.r = s.v = s.t = root;
    s.q = view_.child(root, Side::Right);
    s.d = Dir::Left;
    observe(0);
  }

  // ---- bookkeeping --------------------------------------------------------

  void touch(int i, const NodeHandle& u, bool first) {
    Metrics& m = mach_.metrics_mut();
    ++m.node_touches;
    if (first) {
      ++m.first_touches;
      ++first_touch_count_;
      if (static_cast<int>(u.depth) > max_depth_touched_)
        max_depth_touched_ = static_cast<int>(u.depth);
      vis_.on_first_touch(i, u);
      if (opt_.track_global_touches) {
        auto [it, inserted] = touched_.insert(node_key(u));
        (void)it;
        if (!inserted)
          throw SimError("first-touch partition violated at node " + path_string(u));
      }
    } else if (opt_.track_global_touches) {
      if (!touched_.count(node_key(u)))
        throw SimError("re-touch of a never-touched node " + path_string(u));
    }
  }

  void report_leaf(int i, const NodeHandle& u) {
    vis_.on_view_leaf(i, u);
    ++leaves_count_;
    leaf_checksum_ += node_fingerprint(u);
    if (opt_.collect_leaves) leaves_.push_back(u);
  }

  void observe(int i) { mach_.observe_words(i, st_[i].words() + vis_.extra_words(i)); }

  static std::array<std::uint64_t, 2> node_key(const NodeHandle& u) {
    return {u.path_lo, (u.path_hi << 7) | u.depth};
  }

  int busy_count() const {
    int n = 0;
    for (const ProcessorState& s : st_)
      n += s.status == Status::Busy || s.status == Status::BusyDonating;
    return n;
  }

  EngineView make_engine_view() {
    EngineView ev;
    ev.mach = &mach_;
    idle_flags_.assign(st_.size(), 0);
    for (std::size_t i = 0; i < st_.size(); ++i) {
      switch (st_[i].status) {
        case Status::IdleFree:
          ++ev.idle_free;
          idle_flags_[i] = 1;
          break;
        case Status::IdleWaiting: ++ev.idle_waiting; break;
        default: ++ev.busy; break;
      }
    }
    ev.inflight = mach_.has_inflight();
    ev.idle_free_flags = idle_flags_;
    return ev;
  }

  // ---- traversal phase ----------------------------------------------------

  void traversal_phase() {
    mach_.set_phase(Phase::Traversal);
    active_.clear();
    for (int i = 0; i < mach_.p(); ++i)
      if (st_[i].status == Status::Busy || st_[i].status == Status::BusyDonating)
        active_.push_back(i);
    for (int s = 0; s < cfg_.delta_t; ++s) {
      mach_.lockstep(std::span<const int>(active_), [&](int i, const Message*) {
        if (st_[i].status == Status::Busy || st_[i].status == Status::BusyDonating)
          traversal_step(i);
      });
    }
  }

  void traversal_step(int i) {
    ProcessorState& s = st_[i];
    switch (s.d) {
      case Dir::Left: {
        touch(i, s.v, true);
        if (view_.is_leaf(s.v)) {
          report_leaf(i, s.v);
          s.d = Dir::Parent;
        } else if (auto c = view_.child(s.v, Side::Left)) {
          s.v = *c;
        } else {
          s.v = *view_.child(s.v, Side::Right);
        }
        break;
      }
      case Dir::Right: {
        touch(i, s.v, false);
        if (same_node(s.v, s.r)) {
          root_descend(i);
        } else {
          s.v = *view_.child(s.v, Side::Right);
          s.d = Dir::Left;
        }
        break;
      }
      case Dir::Parent: {
        touch(i, s.v, false);
        if (same_node(s.v, s.r)) {
          become_idle(i);
          return;
        }
        bool from_left = s.v.is_left_child();
        bool t_moves = same_node(s.v, s.t);
        s.v = *view_.parent(s.v);
        if (t_moves) {
          s.t = s.v;
          on_tail_shrink(i);
        }
        s.d = (from_left && view_.has_child(s.v, Side::Right)) ? Dir::Right : Dir::Parent;
        break;
      }
    }
    observe(i);
    if (opt_.check_invariants) check_state(i);
  }

  void root_descend(int i) {
    ProcessorState& s = st_[i];
    // v == r with d == Right; d only turns Right toward an in-view child.
    if (opt_.check_invariants && !same_node(s.t, s.r))
      throw SimError("root descend with t != r");
    NodeHandle w = *view_.child(s.r, Side::Right);
    s.r = s.v = s.t = w;
    s.q = view_.child(w, Side::Right);
    s.d = Dir::Left;
  }

  void become_idle(int i) {
    st_[i] = ProcessorState{};
    observe(i);
  }

  // Tail bookkeeping when t moves to its parent while a slow donation is
  // pending: m stays the ceil(L/2)-step ancestor of t, u is dropped if it
  // falls inside the to-be-donated subtree, and the whole donation falls
  // back to Case 1 once the tail is short.
  void on_tail_shrink(int i) {
    ProcessorState& s = st_[i];
    if (s.stage == DonationStage::None) return;
    if (opt_.check_invariants && s.stage == DonationStage::Sending && s.send_stage > 0)
      throw SimError("slow-donation sends straddled a traversal phase");
    std::uint64_t len = s.t.depth - s.r.depth;
    if (len <= 1) {
      clear_scratch(s);
      return;
    }
    if (s.mid) {
      std::uint64_t desired = s.r.depth + len / 2;
      while (s.mid->depth > desired) {
        s.mid = *view_.parent(*s.mid);
        if (s.turn && s.turn->depth > s.mid->depth) s.turn.reset();
      }
    }
  }

  static void clear_scratch(ProcessorState& s) {
    s.stage = DonationStage::None;
    s.cursor = NodeHandle{};
    s.mid.reset();
    s.turn.reset();
    s.send_stage = 0;
  }

  // ---- pairing phase ------------------------------------------------------

  void pair(int donor, int recipient) {
    st_[donor].paired_with = recipient;
    st_[recipient].paired_with = donor;
    st_[recipient].status = Status::IdleWaiting;
    observe(donor);
    observe(recipient);
  }

  void pairing_phase() {
    mach_.set_phase(Phase::Pairing);
    if (cfg_.variant == Variant::Deterministic) {
      // Prefix-style maximal matching, charged as a black box: the k-th
      // idle-free processor is paired with the k-th willing busy one.
      mach_.charge(Phase::Pairing, cfg_.delta_p);
      idle_scratch_.clear();
      willing_scratch_.clear();
      for (int i = 0; i < mach_.p(); ++i) {
        if (st_[i].status == Status::IdleFree) idle_scratch_.push_back(i);
        else if (st_[i].status == Status::Busy && st_[i].paired_with < 0)
          willing_scratch_.push_back(i);
      }
      std::size_t k = std::min(idle_scratch_.size(), willing_scratch_.size());
      for (std::size_t j = 0; j < k; ++j) pair(willing_scratch_[j], idle_scratch_[j]);
      return;
    }
    // Randomized: one step of requests to uniformly random targets, one step
    // of grants. Collisions drop surplus requests, so a busy processor sees
    // at most one.
    active_.clear();
    for (int i = 0; i < mach_.p(); ++i)
      if (st_[i].status == Status::IdleFree) active_.push_back(i);
    mach_.lockstep(std::span<const int>(active_), [&](int i, const Message*) {
      if (st_[i].status != Status::IdleFree) return;
      Message m;
      m.dst = static_cast<int>(mach_.rand_u64(i) & static_cast<std::uint64_t>(mach_.p() - 1));
      m.kind = kMsgPairRequest;
      mach_.send(i, m);
    });
    mach_.lockstep(std::span<const int>{}, [&](int i, const Message* in) {
      if (!in || in->kind != kMsgPairRequest) return;
      ProcessorState& s = st_[i];
      if (s.status != Status::Busy || s.paired_with >= 0) return;  // only busy grants
      s.paired_with = in->src;
      Message g;
      g.dst = in->src;
      g.kind = kMsgPairGrant;
      mach_.send(i, g);
      observe(i);
    });
  }

  // ---- donation phase -----------------------------------------------------

  void donation_phase() {
    mach_.set_phase(Phase::Donation);
    donors_.clear();
    for (int i = 0; i < mach_.p(); ++i) {
      const ProcessorState& s = st_[i];
      if (s.paired_with >= 0 && (s.status == Status::Busy || s.status == Status::BusyDonating))
        donors_.push_back(i);
    }
    for (int step = 0; step < cfg_.delta_d; ++step) {
      int steps_left = cfg_.delta_d - step;
      mach_.lockstep(std::span<const int>(donors_), [&](int i, const Message* in) {
        if (in) {
          handle_donation_message(i, *in);
          return;
        }
        ProcessorState& s = st_[i];
        if (s.paired_with >= 0 &&
            (s.status == Status::Busy || s.status == Status::BusyDonating))
          donor_step(i, steps_left);
      });
    }
    for (int i : donors_) {
      if (st_[i].paired_with >= 0 && st_[i].status == Status::BusyDonating)
        ++mach_.metrics_mut().donations_slow_interrupted;
    }
  }

  void donor_step(int i, int steps_left) {
    ProcessorState& s = st_[i];
    if (s.stage != DonationStage::None) {
      case2_step(i, steps_left);
      return;
    }
    if (s.q) {
      quick_donation(i);
      return;
    }
    if (same_node(s.t, s.r) && !same_node(s.v, s.r)) s.t = s.v;  // tail creation
    std::uint64_t len = s.t.depth - s.r.depth;
    if (len == 0)
      case1_len0(i);
    else if (len == 1)
      case1_len1(i);
    else {
      s.status = Status::BusyDonating;
      s.stage = DonationStage::Measuring;
      s.cursor = s.t;
      if (opt_.check_invariants) recorded_len_.erase(i);
      case2_step(i, steps_left);
    }
  }

  void send_node(int i, int dst, std::uint32_t kind, const NodeHandle& n) {
    Message m;
    m.dst = dst;
    m.kind = kind;
    m.nwords = 4;
    m.w[0] = n.path_lo;
    m.w[1] = n.path_hi;
    m.w[2] = n.depth;
    m.w[3] = n.cost;
    mach_.send(i, m);
  }

  static NodeHandle unpack_node(const Message& m) {
    NodeHandle n;
    n.path_lo = m.w[0];
    n.path_hi = m.w[1];
    n.depth = m.w[2];
    n.cost = m.w[3];
    return n;
  }

  void send_free(int i) {
    Message m;
    m.dst = st_[i].paired_with;
    m.kind = kMsgFree;
    mach_.send(i, m);
    st_[i].paired_with = -1;
  }

  void quick_donation(int i) {
    ProcessorState& s = st_[i];
    NodeHandle donated = *s.q;
    send_node(i, s.paired_with, kMsgDonateRoot, donated);
    ++mach_.metrics_mut().donations_quick;
    note_donation_completed(i);
    if (same_node(s.v, s.r)) {
      if (s.d == Dir::Left) {
        // Pre-first-touch boundary state: keep the left subtree, stepping
        // the exploration onto it. Unreachable while delta_t >= 1.
        touch(i, s.r, true);
        NodeHandle left = *view_.child(s.r, Side::Left);
        s.r = s.v = s.t = left;
        s.q.reset();
        s.d = Dir::Left;
        s.paired_with = -1;
        observe(i);
        return;
      }
      // v == r with the left subtree finished: the right subtree was the
      // donor's entire remaining work, so it goes idle.
      int partner = s.paired_with;
      (void)partner;
      st_[i] = ProcessorState{};
      observe(i);
      return;
    }
    NodeHandle new_r = *view_.child(s.r, Side::Left);
    bool t_was_r = same_node(s.t, s.r);
    s.r = new_r;
    if (t_was_r) s.t = new_r;
    s.q.reset();
    s.paired_with = -1;
    observe(i);
    if (opt_.check_invariants) check_state(i);
  }

  void case1_len0(int i) {
    ProcessorState& s = st_[i];
    send_free(i);
    if (s.d == Dir::Right) {
      // Root descend exactly as the traversal rule; the current root is no
      // longer needed.
      touch(i, s.r, false);
      root_descend(i);
    }
    // d == Left: the root is a still-unreported leaf, the next traversal
    // step reports it. d == Parent: the subtree is finished and the next
    // traversal step goes idle. Either way no donation is possible.
    observe(i);
  }

  void case1_len1(int i) {
    ProcessorState& s = st_[i];
    if (s.t.is_left_child()) {
      if (auto w = view_.child(s.r, Side::Right)) {
        send_node(i, s.paired_with, kMsgDonateRoot, *w);
        ++mach_.metrics_mut().donations_slow_completed;
        note_donation_completed(i);
        s.paired_with = -1;
      } else {
        send_free(i);
      }
      s.r = s.t;  // q stays undefined; v, d, t unchanged
    } else {
      // t is the right child of r: the left half is already explored and r
      // is no longer needed, but there is nothing left to donate.
      send_free(i);
      s.r = s.t;
      if (same_node(s.v, s.t)) {
        if (s.d == Dir::Right) ++diag_case1_rewind_;  // believed unreachable
        if (s.d != Dir::Parent) s.q = view_.child(s.r, Side::Right);
      }
    }
    observe(i);
    if (opt_.check_invariants) check_state(i);
  }

  void case2_step(int i, int steps_left) {
    ProcessorState& s = st_[i];
    switch (s.stage) {
      case DonationStage::Measuring: {
        s.cursor = *view_.parent(s.cursor);
        if (same_node(s.cursor, s.r)) {
          if (opt_.check_invariants) recorded_len_[i] = s.t.depth - s.r.depth;
          s.stage = DonationStage::Splitting;
          s.cursor = s.t;
        }
        break;
      }
      case DonationStage::Splitting: {
        std::uint64_t len = s.t.depth - s.r.depth;  // >= 2 while Case 2 is live
        std::uint64_t target = s.r.depth + len / 2; // depth of the middle node
        if (s.cursor.depth > target) s.cursor = *view_.parent(s.cursor);
        if (s.cursor.depth <= target) {
          s.mid = s.cursor;
          s.stage = DonationStage::Scanning;
        }
        break;
      }
      case DonationStage::Scanning: {
        // Check the current node (skipping any now below m), then climb.
        if (s.cursor.depth <= s.mid->depth && s.cursor.is_left_child()) {
          NodeHandle par = *view_.parent(s.cursor);
          if (view_.has_child(par, Side::Right)) s.turn = s.cursor;
        }
        s.cursor = *view_.parent(s.cursor);
        if (same_node(s.cursor, s.r)) {
          s.stage = DonationStage::Sending;
          s.send_stage = 0;
        }
        break;
      }
      case DonationStage::Sending: {
        // The three completion messages stay within one donation phase so the
        // recipient is installed before the next traversal phase: wait for a
        // fresh phase unless send+deliver still fits.
        if (s.send_stage == 0 && steps_left < 4) return;
        if (s.send_stage == 0) {
          send_node(i, s.paired_with, kMsgCase2M, *s.mid);
          s.send_stage = 1;
        } else if (s.send_stage == 1) {
          Message m;
          m.dst = s.paired_with;
          m.kind = kMsgCase2VD;
          m.nwords = 5;
          m.w[0] = s.v.path_lo;
          m.w[1] = s.v.path_hi;
          m.w[2] = s.v.depth;
          m.w[3] = s.v.cost;
          m.w[4] = static_cast<std::uint64_t>(s.d);
          mach_.send(i, m);
          s.send_stage = 2;
        } else {
          send_node(i, s.paired_with, kMsgCase2T, s.t);
          complete_case2(i);
        }
        break;
      }
      case DonationStage::None:
        break;
    }
    observe(i);
  }

  void complete_case2(int i) {
    ProcessorState& s = st_[i];
    ++mach_.metrics_mut().donations_slow_completed;
    note_donation_completed(i);
    if (opt_.check_invariants) {
      auto it = recorded_len_.find(i);
      if (it != recorded_len_.end()) {
        std::uint64_t half = (it->second + 1) / 2;
        std::uint64_t recipient_tail = s.t.depth - s.mid->depth;
        if (recipient_tail > half)
          throw SimError("tail halving violated: recipient tail " +
                         std::to_string(recipient_tail) + " > " + std::to_string(half));
        if (s.turn && s.mid->depth - s.turn->depth > half)
          throw SimError("tail halving violated on the donor side");
        recorded_len_.erase(it);
      }
    }
    if (s.turn) {
      NodeHandle z = *view_.parent(*s.turn);
      NodeHandle ell = *view_.parent(*s.mid);
      bool mid_was_left = s.mid->is_left_child();
      s.r = z;
      s.q = view_.child(z, Side::Right);
      s.v = s.t = ell;
      s.d = (mid_was_left && view_.has_child(ell, Side::Right)) ? Dir::Right : Dir::Parent;
      s.status = Status::Busy;
      s.paired_with = -1;
      clear_scratch(s);
      observe(i);
      if (opt_.check_invariants) check_state(i);
    } else {
      // No unexplored work remains outside the donated subtree.
      st_[i] = ProcessorState{};
      observe(i);
    }
  }

  void handle_donation_message(int i, const Message& msg) {
    ProcessorState& s = st_[i];
    switch (msg.kind) {
      case kMsgPairGrant:
        s.status = Status::IdleWaiting;
        s.paired_with = msg.src;
        observe(i);
        break;
      case kMsgFree:
        st_[i] = ProcessorState{};
        observe(i);
        break;
      case kMsgDonateRoot: {
        NodeHandle node = unpack_node(msg);
        st_[i] = ProcessorState{};
        ProcessorState& n = st_[i];
        n.status = Status::Busy;
        n.r = n.v = n.t = node;
        if (view_.is_leaf(node)) {
          // A donated leaf is reported on installation; the first traversal
          // step then retires the one-node subtree.
          touch(i, node, true);
          report_leaf(i, node);
          n.d = Dir::Parent;
        } else {
          n.d = Dir::Left;
          n.q = view_.child(node, Side::Right);
        }
        observe(i);
        if (opt_.check_invariants) check_state(i);
        break;
      }
      case kMsgCase2M:
        s.in_m = unpack_node(msg);
        observe(i);
        break;
      case kMsgCase2VD: {
        s.in_v = unpack_node(msg);
        s.in_d = static_cast<Dir>(msg.w[4]);
        observe(i);
        break;
      }
      case kMsgCase2T: {
        NodeHandle t = unpack_node(msg);
        NodeHandle m = *s.in_m;
        NodeHandle v = *s.in_v;
        Dir d = s.in_d;
        st_[i] = ProcessorState{};
        ProcessorState& n = st_[i];
        n.status = Status::Busy;
        n.r = m;
        n.v = v;
        n.d = d;
        n.t = t;
        observe(i);
        if (opt_.check_invariants) check_state(i);
        break;
      }
      default:
        break;  // stray pairing requests are ignored
    }
  }

  void note_donation_completed(int i) {
    if (opt_.diagnose) epoch_donated_.insert(i);
  }

  // ---- invariants & trace -------------------------------------------------

  void check_state(int i) const {
    const ProcessorState& s = st_[i];
    if (s.status != Status::Busy && s.status != Status::BusyDonating) return;
    if (!is_ancestor_or_self(s.r, s.t) || !is_ancestor_or_self(s.t, s.v))
      throw SimError("state sanity violated at P" + std::to_string(i) +
                     ": t not on the r..v path");
    if (s.q) {
      auto rc = view_.child(s.r, Side::Right);
      if (!rc || !same_node(*rc, *s.q))
        throw SimError("state sanity violated at P" + std::to_string(i) +
                       ": q is not the right child of r");
    }
  }

  void push_trace(std::uint64_t epoch, int busy_at_sample, bool full, const Metrics& before) {
    const Metrics& after = mach_.metrics();
    EpochTrace tr;
    tr.epoch = epoch;
    tr.delta_t = cfg_.delta_t;
    tr.delta_p = cfg_.delta_p;
    tr.delta_d = cfg_.delta_d;
    tr.busy = busy_at_sample;
    for (const ProcessorState& s : st_) {
      tr.idle_free += s.status == Status::IdleFree;
      tr.idle_waiting += s.status == Status::IdleWaiting;
    }
    tr.full = full;
    tr.donations_quick = after.donations_quick - before.donations_quick;
    tr.donations_slow = after.donations_slow_completed - before.donations_slow_completed;
    tr.messages_dropped = after.messages_dropped - before.messages_dropped;
    tr.steps_total = after.steps_total - start_metrics_.steps_total;
    if (opt_.diagnose) {
      int special = -1;
      std::uint64_t best_depth = 0;
      for (int i = 0; i < mach_.p(); ++i) {
        const ProcessorState& s = st_[i];
        if (s.status != Status::Busy && s.status != Status::BusyDonating) continue;
        if (!is_ancestor_or_self(s.r, *opt_.diagnose)) continue;
        if (special < 0 || s.r.depth > best_depth) {
          special = i;
          best_depth = s.r.depth;
        }
      }
      tr.diag = special >= 0;
      if (special >= 0) {
        tr.diag_donating = epoch_donated_.count(special) > 0;
        tr.diag_preparing = st_[special].status == Status::BusyDonating;
      }
      epoch_donated_.clear();
    }
    trace_.push_back(tr);
  }

  VisitReport finalize() {
    VisitReport rep;
    bool all_idle = true;
    for (const ProcessorState& s : st_) all_idle = all_idle && s.status == Status::IdleFree;
    rep.completed = done_early_ || (all_idle && !mach_.has_inflight());
    rep.leaves_reported = leaves_count_;
    rep.leaf_checksum = leaf_checksum_;
    rep.leaves = std::move(leaves_);
    rep.nodes_first_touched = first_touch_count_;
    rep.steps_total = mach_.metrics().steps_total - start_metrics_.steps_total;
    rep.trace = std::move(trace_);
    rep.metrics = mach_.metrics() - start_metrics_;
    return rep;
  }

 public:
  int max_depth_touched() const { return max_depth_touched_; }
  std::uint64_t case1_rewind_diag() const { return diag_case1_rewind_; }

 private:
  Machine& mach_;
  TreeView view_;
  EpochConfig cfg_;
  Visitor& vis_;
  EngineOptions opt_;
  std::vector<ProcessorState> st_;
  Metrics start_metrics_;
  bool done_early_ = false;

  std::uint64_t leaves_count_ = 0;
  std::uint64_t leaf_checksum_ = 0;
  std::vector<NodeHandle> leaves_;
  std::uint64_t first_touch_count_ = 0;
  int max_depth_touched_ = 0;
  std::uint64_t diag_case1_rewind_ = 0;

  std::vector<int> active_;
  std::vector<int> donors_;
  std::vector<int> idle_scratch_;
  std::vector<int> willing_scratch_;
  std::vector<std::uint8_t> idle_flags_;
  std::vector<EpochTrace> trace_;
  std::unordered_set<int> epoch_donated_;
  std::unordered_map<int, std::uint64_t> recorded_len_;

  struct KeyHash {
    std::size_t operator()(const std::array<std::uint64_t, 2>& k) const {
      std::uint64_t x = k[0] ^ (k[1] * 0x9e3779b97f4a7c15ull);
      x ^= x >> 33;
      x *= 0xff51afd7ed558ccdull;
      x ^= x >> 33;
      return static_cast<std::size_t>(x);
    }
  };
  std::unordered_set<std::array<std::uint64_t, 2>, KeyHash> touched_;
};

// Convenience drivers for whole-tree backtrack search.
VisitReport run_deterministic(Machine& mach, const TreeView& view, const EpochConfig& cfg,
                              EngineOptions opt = {});
VisitReport run_randomized(Machine& mach, const TreeView& view, const EpochConfig& cfg,
                           EngineOptions opt = {});

}  // namespace spacebound
