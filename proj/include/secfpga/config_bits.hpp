#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/rr_graph.hpp"
#include "secfpga/switchbox.hpp"

namespace secfpga {

struct ConfigBitRow {
  std::string submodule;
  long quantity = 0;
  std::string per_unit; // human-readable product, e.g. "(12+7)x8"
  long per_unit_count = 0;
  long total = 0;
};

struct ConfigBitCount {
  std::vector<ConfigBitRow> rows;
  long total = 0;
};

/// Closed-form configuration-bit count, independent of the graph builder.
///
/// A box with N channel-facing sides has C(N,2) * W switches; a connection box has
/// (N_I + N_O) * W * Fc. Edge and corner boxes of the (w+1) x (h+1) switchbox
/// lattice lose the sides that face off the fabric.
inline ConfigBitCount count_config_bits(const ArchSpec& a) {
  a.validate();
  const int w = a.grid_w, h = a.grid_h, W = a.channel_width;
  ConfigBitCount out;
  auto add = [&](std::string name, long qty, std::string per, long per_count) {
    out.rows.push_back({std::move(name), qty, std::move(per), per_count, qty * per_count});
    out.total += qty * per_count;
  };
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  const long plbs = static_cast<long>(w) * h;
  const long iobs = a.num_iobs();
  add("PLB", plbs, std::to_string(plb_config_bits), plb_config_bits);

  const long plb_cbox = static_cast<long>(a.plb_inputs + a.plb_outputs) * tracks_per_pin(W, a.fc_plb);
  add("PLB Connection Box", plbs,
      "(" + std::to_string(a.plb_inputs) + "+" + std::to_string(a.plb_outputs) + ")x" +
          std::to_string(W) + (a.fc_plb < 1.0 ? "x" + fmt(a.fc_plb) : ""),
      plb_cbox);

  const long iob_cbox = static_cast<long>(a.iob_inputs + a.iob_outputs) * tracks_per_pin(W, a.fc_iob);
  add("IO Connection Box", iobs,
      "(" + std::to_string(a.iob_inputs) + "+" + std::to_string(a.iob_outputs) + ")x" +
          std::to_string(W) + (a.fc_iob < 1.0 ? "x" + fmt(a.fc_iob) : ""),
      iob_cbox);
  add("IO Config Bits", iobs, std::to_string(iob_config_bits), iob_config_bits);

  long full = 0, half = 0, quarter = 0;
  for (int by = 0; by <= h; ++by)
    for (int bx = 0; bx <= w; ++bx) {
      const int sides = (bx > 0) + (bx < w) + (by > 0) + (by < h);
      if (sides == 4) ++full;
      else if (sides == 3) ++half;
      else ++quarter;
    }
  add("Switchbox(Full)", full, "6x" + std::to_string(W), switchbox_switch_count(4, W));
  add("Switchbox(1/2)", half, "3x" + std::to_string(W), switchbox_switch_count(3, W));
  add("Switchbox(1/4)", quarter, "1x" + std::to_string(W), switchbox_switch_count(2, W));
  return out;
}

inline std::string config_bits_table(const ConfigBitCount& c) {
  std::ostringstream os;
  os << "SubModule,Qty,SwitchCount,Total\n";
  for (const auto& r : c.rows)
    os << r.submodule << ',' << r.quantity << ',' << r.per_unit << ',' << r.total << '\n';
  os << "Total,,," << c.total << '\n';
  return os.str();
}

} // namespace secfpga
