#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <set>
#include <span>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/error.hpp"

namespace secfpga {

enum Side : int { Left = 0, Top = 1, Right = 2, Bottom = 3 };

inline constexpr std::array<Side, 4> all_sides{Left, Top, Right, Bottom};

// Terminal t(side, index) of a switchbox with W tracks per side.
struct Terminal {
  int side = 0;
  int index = 0;
  auto operator<=>(const Terminal&) const = default;
};

// One programmable switch. For bidirectional boxes `a`/`b` are unordered (a < b);
// for single-driver boxes the switch drives `to` from `from`.
struct SwitchPair {
  Terminal a;
  Terminal b;
  bool directed = false;
  int slot = 0; // config-bit slot inside the box

  const Terminal& from() const { return a; }
  const Terminal& to() const { return b; }
};

struct SwitchSet {
  int channel_width = 0;
  SwitchboxKind kind = SwitchboxKind::Subset;
  DriverMode driver_mode = DriverMode::Bidirectional;
  std::vector<SwitchPair> pairs;

  std::size_t size() const { return pairs.size(); }
};

// Single-driver tracks: even tracks run left->right and bottom->top, odd tracks
// the reverse. A terminal is incoming when its wire flows into the box.
inline bool terminal_incoming(Terminal t) {
  const bool even = t.index % 2 == 0;
  switch (t.side) {
  case Left:
  case Bottom: return even;
  default: return !even;
  }
}

namespace detail {

inline void add_pair(std::vector<SwitchPair>& out, Terminal x, Terminal y) {
  if (y < x) std::swap(x, y);
  out.push_back({x, y, false, 0});
}

// Undirected endpoint topology of each kind, restricted to the present sides.
inline std::vector<SwitchPair> undirected_pairs(SwitchboxKind kind, int W,
                                                const std::array<bool, 4>& present) {
  std::vector<SwitchPair> out;
  auto has = [&](int s) { return present[static_cast<std::size_t>(s)]; };
  auto add = [&](Terminal x, Terminal y) {
    if (has(x.side) && has(y.side)) add_pair(out, x, y);
  };
  for (int i = 0; i < W; ++i) {
    const int r = W - 1 - i;
    switch (kind) {
    case SwitchboxKind::Subset:
      for (int j = 0; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k) add({j, i}, {k, i});
      break;
    case SwitchboxKind::TwistOnTurn:
    case SwitchboxKind::TwistAlways: {
      const bool twist_straight = kind == SwitchboxKind::TwistAlways;
      add({Left, i}, {Right, twist_straight ? r : i});
      add({Top, i}, {Bottom, twist_straight ? r : i});
      add({Left, i}, {Top, i});
      add({Top, i}, {Right, r});
      add({Right, i}, {Bottom, i});
      add({Bottom, i}, {Left, r});
      break;
    }
    default: throw ConfigurationError("unknown switchbox kind");
    }
  }
  return out;
}

inline Terminal partner(Terminal t) { return {t.side, t.index ^ 1}; }

// Orients an undirected pair for a single-driver box. When both wires flow the
// same way the switch moves to the partner track of the opposite direction.
inline SwitchPair orient(const SwitchPair& p) {
  const bool ia = terminal_incoming(p.a);
  const bool ib = terminal_incoming(p.b);
  if (ia && !ib) return {p.a, p.b, true, 0};
  if (ib && !ia) return {p.b, p.a, true, 0};
  if (ia && ib) return {p.b, partner(p.a), true, 0};
  return {partner(p.a), p.b, true, 0};
}

} // namespace detail

/// Builds the switch set of a box whose sides flagged in `present` face a
/// channel. Full interior boxes pass all four sides.
inline SwitchSet build_switchbox(SwitchboxKind kind, int W, DriverMode mode,
                                 const std::array<bool, 4>& present) {
  if (W < 1) throw ValidationError("switchbox channel width must be >= 1");
  if (mode == DriverMode::SingleDriver && W % 2 != 0)
    throw ValidationError("single-driver switchbox needs an even channel width");
  if (kind != SwitchboxKind::Subset && kind != SwitchboxKind::TwistOnTurn &&
      kind != SwitchboxKind::TwistAlways)
    throw ConfigurationError("unknown switchbox kind");

  SwitchSet s{W, kind, mode, detail::undirected_pairs(kind, W, present)};
  if (mode == DriverMode::SingleDriver)
    for (auto& p : s.pairs) p = detail::orient(p);
  for (std::size_t i = 0; i < s.pairs.size(); ++i) s.pairs[i].slot = static_cast<int>(i);
  return s;
}

inline SwitchSet build_switchbox(SwitchboxKind kind, int W,
                                 DriverMode mode = DriverMode::Bidirectional) {
  return build_switchbox(kind, W, mode, {true, true, true, true});
}

/// Number of switches in a box with `sides` sides: C(sides, 2) * W.
inline long switchbox_switch_count(int sides, int W) {
  return static_cast<long>(sides) * (sides - 1) / 2 * W;
}

/// Track reached when going straight through a twist-always box.
inline int twist_straight(int index, int W) { return W - 1 - index; }

} // namespace secfpga
