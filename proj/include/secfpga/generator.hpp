#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/netlist.hpp"

namespace secfpga {

/// Shape of a synthetic WDDL-style netlist: every logic signal is a rail pair
/// (rail1 on an even pin, rail0 on the next pin) driven by one PLB and fanning
/// out to a few other PLBs.
struct SuiteParams {
  int min_grid = 2;
  int max_grid = 8;
  double plb_usage = 0.8;  // fraction of PLBs holding a gate
  int max_output_pairs = 2; // per gate
  int max_fanout = 3;
  int iob_pairs = 2;       // primary input / output pairs through the IO ring
  int locality = 3;        // sinks lie within this Manhattan distance when possible
};

namespace detail {

inline int uniform(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline std::string iob_id(int i) { return "io" + std::to_string(i); }

// Ring position of IOB i, ordered bottom, right, top, left.
inline std::pair<int, int> iob_position(int i, int w, int h) {
  if (i < w) return {i, -1};
  i -= w;
  if (i < h) return {w, i};
  i -= h;
  if (i < w) return {i, h};
  return {-1, i - w};
}

} // namespace detail

/// Deterministic for a given (seed, params). Grid side is drawn from
/// [min_grid, max_grid] unless `arch` already fixes it via `fixed_grid`.
inline PlacedNetlist generate_wddl_netlist(std::uint64_t seed, const SuiteParams& sp = {},
                                           const ArchSpec& arch = {}, bool fixed_grid = false) {
  std::mt19937_64 rng(seed);
  const int w = fixed_grid ? arch.grid_w : detail::uniform(rng, sp.min_grid, sp.max_grid);
  const int h = fixed_grid ? arch.grid_h : w;
  const int in_pairs = arch.plb_inputs / 2;
  const int out_pairs = std::min(sp.max_output_pairs, arch.plb_outputs / 2);

  PlacedNetlist nl;
  nl.name = "wddl_s" + std::to_string(seed);
  nl.grid_w = w;
  nl.grid_h = h;

  std::vector<std::pair<int, int>> gates;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool first = gates.empty() && x == w - 1 && y == h - 1;
      if (first || std::uniform_real_distribution<double>(0, 1)(rng) < sp.plb_usage) {
        gates.emplace_back(x, y);
        nl.blocks.push_back({"g" + std::to_string(x) + "_" + std::to_string(y), BlockKind::PLB, x, y, ""});
      }
    }
  std::vector<int> next_in(gates.size(), 0);
  int pair_id = 0;

  auto add_pair = [&](const PinRef& s1, const PinRef& s0, const std::vector<std::pair<PinRef, PinRef>>& sinks) {
    Net n1{"n" + std::to_string(pair_id) + "_t", s1, {}};
    Net n0{"n" + std::to_string(pair_id) + "_f", s0, {}};
    for (const auto& [a, b] : sinks) {
      n1.sinks.push_back(a);
      n0.sinks.push_back(b);
    }
    nl.dual_pairs.push_back({n1.id, n0.id});
    nl.nets.push_back(std::move(n1));
    nl.nets.push_back(std::move(n0));
    ++pair_id;
  };

  // Picks up to `count` distinct gates other than `self` with a free input pair,
  // preferring nearby ones.
  auto pick_sinks = [&](int self, int sx, int sy, int count) {
    std::vector<int> near, far;
    for (std::size_t g = 0; g < gates.size(); ++g) {
      if (static_cast<int>(g) == self || next_in[g] >= in_pairs) continue;
      const int d = std::abs(gates[g].first - sx) + std::abs(gates[g].second - sy);
      (d <= sp.locality ? near : far).push_back(static_cast<int>(g));
    }
    std::vector<int> chosen;
    for (auto* pool : {&near, &far})
      while (static_cast<int>(chosen.size()) < count && !pool->empty()) {
        const auto k = static_cast<std::size_t>(detail::uniform(rng, 0, static_cast<int>(pool->size()) - 1));
        chosen.push_back((*pool)[k]);
        pool->erase(pool->begin() + static_cast<std::ptrdiff_t>(k));
      }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  };
  auto input_pair = [&](int g) {
    const int n = next_in[static_cast<std::size_t>(g)]++;
    const auto& id = nl.blocks[static_cast<std::size_t>(g)].id;
    return std::pair{PinRef{id, false, 2 * n}, PinRef{id, false, 2 * n + 1}};
  };

  // IOB pairs use pins 0 and 2, which see neighbouring tracks through a half-populated
  // connection box.
  const int iobs = 2 * (w + h);
  std::vector<int> ring(static_cast<std::size_t>(iobs));
  for (int i = 0; i < iobs; ++i) ring[static_cast<std::size_t>(i)] = i;
  std::shuffle(ring.begin(), ring.end(), rng);
  const int iob_used = std::min(iobs, 2 * sp.iob_pairs);
  std::vector<std::string> iob_blocks;
  for (int k = 0; k < iob_used; ++k) {
    auto [x, y] = detail::iob_position(ring[static_cast<std::size_t>(k)], w, h);
    iob_blocks.push_back(detail::iob_id(ring[static_cast<std::size_t>(k)]));
    nl.blocks.push_back({iob_blocks.back(), BlockKind::IOB, x, y, ""});
  }
  for (int k = 0; k < iob_used; k += 2) {
    const auto& in = iob_blocks[static_cast<std::size_t>(k)];
    auto [ix, iy] = detail::iob_position(ring[static_cast<std::size_t>(k)], w, h);
    auto sinks = pick_sinks(-1, std::clamp(ix, 0, w - 1), std::clamp(iy, 0, h - 1), 1);
    std::vector<std::pair<PinRef, PinRef>> ps;
    for (int g : sinks) ps.push_back(input_pair(g));
    if (!ps.empty()) add_pair({in, true, 0}, {in, true, 2}, ps);
  }

  for (std::size_t g = 0; g < gates.size(); ++g) {
    const auto [x, y] = gates[g];
    const int outs = detail::uniform(rng, 1, std::max(1, out_pairs));
    for (int m = 0; m < outs; ++m) {
      auto sinks = pick_sinks(static_cast<int>(g), x, y, detail::uniform(rng, 1, sp.max_fanout));
      if (sinks.empty()) break;
      std::vector<std::pair<PinRef, PinRef>> ps;
      for (int s : sinks) ps.push_back(input_pair(s));
      const auto& id = nl.blocks[g].id;
      add_pair({id, true, 2 * m}, {id, true, 2 * m + 1}, ps);
    }
  }

  // Primary outputs: output IOB k is fed by gate k/2.
  for (int k = 1; k < iob_used; k += 2) {
    const auto& out = iob_blocks[static_cast<std::size_t>(k)];
    const auto g = static_cast<std::size_t>(k / 2) % gates.size();
    const auto& id = nl.blocks[g].id;
    const int m = std::max(1, out_pairs); // output pair index left free by the gate loop
    if (2 * m + 1 >= arch.plb_outputs) break;
    add_pair({id, true, 2 * m}, {id, true, 2 * m + 1}, {{PinRef{out, false, 0}, PinRef{out, false, 2}}});
  }
  return nl;
}

/// The fixed-seed benchmark suite: netlist i uses seed base_seed + i.
inline std::vector<PlacedNetlist> generate_suite(int count, std::uint64_t base_seed = 1,
                                                 const SuiteParams& sp = {}, const ArchSpec& arch = {}) {
  std::vector<PlacedNetlist> out;
  for (int i = 0; i < count; ++i) out.push_back(generate_wddl_netlist(base_seed + static_cast<std::uint64_t>(i), sp, arch));
  return out;
}

} // namespace secfpga
