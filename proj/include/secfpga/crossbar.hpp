#pragma once

#include <algorithm>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/error.hpp"

namespace secfpga {

inline int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

// Leaf depths of a balanced binary tree with `leaves` leaves, left to right.
inline std::vector<int> balanced_leaf_depths(int leaves) {
  std::vector<int> depths;
  auto rec = [&](auto&& self, int n, int depth) -> void {
    if (n == 1) {
      depths.push_back(depth);
      return;
    }
    const int left = (n + 1) / 2;
    self(self, left, depth + 1);
    self(self, n - left, depth + 1);
  };
  if (leaves > 0) rec(rec, leaves, 0);
  return depths;
}

struct BalancedTree {
  std::vector<int> leaf_depths;

  int min_depth() const { return *std::min_element(leaf_depths.begin(), leaf_depths.end()); }
  int max_depth() const { return *std::max_element(leaf_depths.begin(), leaf_depths.end()); }
};

struct SwitchPoint {
  int track = 0; // channel wire
  int pin = 0;   // block pin
};

/// Balanced crossbar connection box: W channel trees with I branches, I block
/// trees with W branches, superimposed orthogonally.
struct CrossbarPlan {
  int channel_width = 0;
  int pins = 0;
  double fc = 1.0;
  std::vector<BalancedTree> channel_trees;
  std::vector<BalancedTree> block_trees;
  std::vector<SwitchPoint> switch_points; // pin-major, track ascending
  long area_width = 0;                    // W * ceil(log2 I) routing pitches
  long area_height = 0;                   // I * ceil(log2 W) routing pitches

  long area() const { return area_width * area_height; }
};

// Keep switch (track, pin) iff (track + pin * k) mod W < k, k = round(W * Fc).
inline bool crossbar_keeps(int track, int pin, int W, double fc) {
  const int k = tracks_per_pin(W, fc);
  return (track + static_cast<long>(pin) * k) % W < k;
}

inline CrossbarPlan build_crossbar(int W, int I, double fc) {
  if (W < 1 || I < 1) throw ValidationError("crossbar needs W >= 1 and I >= 1");
  if (!(fc > 0.0 && fc <= 1.0)) throw ValidationError("Fc must lie in (0, 1]");

  CrossbarPlan p;
  p.channel_width = W;
  p.pins = I;
  p.fc = fc;
  p.channel_trees.assign(static_cast<std::size_t>(W), BalancedTree{balanced_leaf_depths(I)});
  p.block_trees.assign(static_cast<std::size_t>(I), BalancedTree{balanced_leaf_depths(W)});
  for (int pin = 0; pin < I; ++pin)
    for (int t = 0; t < W; ++t)
      if (crossbar_keeps(t, pin, W, fc)) p.switch_points.push_back({t, pin});
  p.area_width = static_cast<long>(W) * ceil_log2(I);
  p.area_height = static_cast<long>(I) * ceil_log2(W);
  return p;
}

} // namespace secfpga
