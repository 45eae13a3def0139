#include "spacebound/tree.hpp"

#include <cmath>

#include "json.hpp"

namespace spacebound {
namespace {

// splitmix64 finalizer; the keyed chains below are the only randomness the
// tree model uses, so handles are identical across runs and platforms.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kShapeTag = 0x73686170u;  // shape PRF domain
constexpr std::uint64_t kCostTag = 0x636f7374u;   // cost-increment PRF domain

std::uint64_t prf(std::uint64_t seed, std::uint64_t tag, const NodeHandle& u,
                  std::uint64_t extra) {
  std::uint64_t h = mix64(seed ^ tag);
  h = mix64(h ^ u.path_lo);
  h = mix64(h ^ u.path_hi);
  return mix64(h ^ (u.depth << 8) ^ extra);
}

void set_path_bit(NodeHandle& u, unsigned d, bool bit) {
  if (!bit) return;
  if (d < 64)
    u.path_lo |= 1ull << d;
  else
    u.path_hi |= 1ull << (d - 64);
}

struct FixtureEntry {
  std::uint64_t depth, bits, value;
  bool internal;
};

// T7: the canonical seven-node tree a..g; T3: root plus two leaves.
// Sel1 encodes the frontier-boundary regression instance used by selection
// tests: node LR (cost 9) has a sibling that enters the threshold subtree
// first, so it only ever appears on the outer boundary of T_L.
constexpr FixtureEntry kT7[] = {
    {0, 0, 1, true},  {1, 0, 2, true},  {1, 1, 7, true},  {2, 0b00, 3, false},
    {2, 0b10, 5, false}, {2, 0b01, 8, false}, {2, 0b11, 9, false},
};
constexpr FixtureEntry kT3[] = {
    {0, 0, 5, true}, {1, 0, 7, false}, {1, 1, 9, false},
};
constexpr FixtureEntry kSel1[] = {
    {0, 0, 1, true},    {1, 0, 2, true},    {1, 1, 4, true},
    {2, 0b00, 3, true}, {2, 0b10, 9, false}, {2, 0b01, 5, false},
    {2, 0b11, 6, false}, {3, 0b000, 20, false}, {3, 0b100, 21, false},
};

struct FixtureTable {
  const FixtureEntry* entries;
  int count;
  int height;
};

FixtureTable fixture_table(FixtureId id) {
  switch (id) {
    case FixtureId::T7: return {kT7, 7, 2};
    case FixtureId::T3: return {kT3, 3, 1};
    case FixtureId::Sel1: return {kSel1, 9, 3};
  }
  throw std::logic_error("unknown fixture");
}

}  // namespace

std::string path_string(const NodeHandle& u) {
  if (u.depth == 0) return ".";
  std::string s;
  s.reserve(u.depth);
  for (unsigned d = 0; d < u.depth; ++d) s.push_back(u.path_bit(d) ? 'R' : 'L');
  return s;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::Complete: return "complete";
    case Family::LeftSpine: return "left-spine";
    case Family::RandomFull: return "random-full";
    case Family::Fixed: return "fixed";
  }
  return "?";
}

const char* fixture_name(FixtureId id) {
  switch (id) {
    case FixtureId::T7: return "T7";
    case FixtureId::T3: return "T3";
    case FixtureId::Sel1: return "SEL1";
  }
  return "?";
}

TreeModel::TreeModel(Family f, std::uint64_t seed, int height, double rho, FixtureId fx)
    : family_(f), seed_(seed), height_(height), rho_(rho), fixture_(fx) {
  if (height < 0 || height > kMaxDepth)
    throw std::invalid_argument("tree height cap must be in [0, " +
                                std::to_string(kMaxDepth) + "]");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("leaf probability must be in [0,1]");
  rho_bits_ = rho >= 1.0 ? ~0ull : static_cast<std::uint64_t>(std::ldexp(rho, 64));
}

TreeModel TreeModel::complete(int height) {
  return TreeModel(Family::Complete, 0, height, 0.0, FixtureId::T7);
}

TreeModel TreeModel::left_spine(int height) {
  return TreeModel(Family::LeftSpine, 0, height, 0.0, FixtureId::T7);
}

TreeModel TreeModel::random_full(std::uint64_t seed, int height_cap, double leaf_prob) {
  return TreeModel(Family::RandomFull, seed, height_cap, leaf_prob, FixtureId::T7);
}

TreeModel TreeModel::fixture(FixtureId id) {
  return TreeModel(Family::Fixed, 0, fixture_table(id).height, 0.0, id);
}

std::uint64_t TreeModel::fixture_cost(std::uint64_t depth, std::uint64_t bits,
                                      bool& internal) const {
  FixtureTable t = fixture_table(fixture_);
  for (int i = 0; i < t.count; ++i) {
    if (t.entries[i].depth == depth && t.entries[i].bits == bits) {
      internal = t.entries[i].internal;
      return t.entries[i].value;
    }
  }
  throw std::logic_error("handle does not belong to fixture " +
                         std::string(fixture_name(fixture_)));
}

bool TreeModel::internal_at(const NodeHandle& u) const {
  switch (family_) {
    case Family::Complete:
      return static_cast<int>(u.depth) < height_;
    case Family::LeftSpine:
      // One internal node per depth below the cap: the all-left spine.
      return static_cast<int>(u.depth) < height_ && u.path_lo == 0 && u.path_hi == 0;
    case Family::RandomFull: {
      if (static_cast<int>(u.depth) >= height_) return false;
      if (u.depth == 0) return true;  // root is internal whenever H >= 1
      return prf(seed_, kShapeTag, u, 0) >= rho_bits_;
    }
    case Family::Fixed: {
      bool internal = false;
      fixture_cost(u.depth, u.path_lo, internal);
      return internal;
    }
  }
  return false;
}

std::uint64_t TreeModel::increment(const NodeHandle& parent, Side side) const {
  // Uniform on [1, 2^16]; recomputable in either direction along the edge.
  return 1 + (prf(seed_, kCostTag, parent, static_cast<std::uint64_t>(side)) & 0xffffull);
}

NodeHandle TreeModel::root() const {
  NodeHandle r;
  if (family_ == Family::Fixed) {
    bool internal = false;
    r.cost = fixture_cost(0, 0, internal);
  } else {
    r.cost = 1;
  }
  return r;
}

bool TreeModel::is_leaf(const NodeHandle& u) const { return !internal_at(u); }

std::optional<NodeHandle> TreeModel::child(const NodeHandle& u, Side side) const {
  if (!internal_at(u)) return std::nullopt;
  if (static_cast<int>(u.depth) + 1 > kMaxDepth)
    throw std::logic_error("tree model exceeds MAX_DEPTH capacity");
  NodeHandle c = u;
  set_path_bit(c, static_cast<unsigned>(u.depth), side == Side::Right);
  c.depth = u.depth + 1;
  if (family_ == Family::Fixed) {
    bool internal = false;
    c.cost = fixture_cost(c.depth, c.path_lo, internal);
  } else {
    c.cost = u.cost + increment(u, side);
  }
  return c;
}

std::optional<NodeHandle> TreeModel::parent(const NodeHandle& u) const {
  if (u.depth == 0) return std::nullopt;
  NodeHandle p = u;
  unsigned d = static_cast<unsigned>(u.depth - 1);
  Side side = u.path_bit(d) ? Side::Right : Side::Left;
  if (d < 64)
    p.path_lo &= ~(1ull << d);
  else
    p.path_hi &= ~(1ull << (d - 64));
  p.depth = u.depth - 1;
  if (family_ == Family::Fixed) {
    bool internal = false;
    p.cost = fixture_cost(p.depth, p.path_lo, internal);
  } else {
    p.cost = u.cost - increment(p, side);
  }
  return p;
}

NodeHandle TreeModel::node_at(std::string_view turns) const {
  NodeHandle u = root();
  for (char c : turns) {
    Side s;
    if (c == 'L' || c == 'l')
      s = Side::Left;
    else if (c == 'R' || c == 'r')
      s = Side::Right;
    else if (c == '.')
      continue;
    else
      throw std::invalid_argument("path string may only contain L and R turns");
    auto next = child(u, s);
    if (!next) throw std::invalid_argument("path descends below a leaf: " + std::string(turns));
    u = *next;
  }
  return u;
}

std::string TreeModel::descriptor_json() const {
  nlohmann::ordered_json j;
  j["family"] = family_name(family_);
  j["seed"] = seed_;
  j["H"] = height_;
  j["rho"] = rho_;
  j["fixture"] = family_ == Family::Fixed ? fixture_name(fixture_) : "";
  return j.dump();
}

TreeModel TreeModel::from_descriptor(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  std::string fam = j.at("family").get<std::string>();
  if (fam == "complete") return complete(j.at("H").get<int>());
  if (fam == "left-spine") return left_spine(j.at("H").get<int>());
  if (fam == "random-full")
    return random_full(j.at("seed").get<std::uint64_t>(), j.at("H").get<int>(),
                       j.at("rho").get<double>());
  if (fam == "fixed") {
    std::string fx = j.at("fixture").get<std::string>();
    if (fx == "T7") return fixture(FixtureId::T7);
    if (fx == "T3") return fixture(FixtureId::T3);
    if (fx == "SEL1") return fixture(FixtureId::Sel1);
    throw std::invalid_argument("unknown fixture id: " + fx);
  }
  throw std::invalid_argument("unknown tree family: " + fam);
}

}  // namespace spacebound
