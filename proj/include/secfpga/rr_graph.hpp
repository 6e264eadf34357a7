#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/crossbar.hpp"
#include "secfpga/switchbox.hpp"

namespace secfpga {

using NodeId = std::int32_t;
using SwitchId = std::int32_t;
inline constexpr NodeId no_node = -1;

// PLB internal configuration: four LUT6 (256 bits) followed by input muxes and
// the P output block.
inline constexpr int plb_config_bits = 287;
inline constexpr int plb_lut_bits = 4 * 64;
inline constexpr int iob_config_bits = 3;

enum class NodeKind : std::uint8_t { ChanX, ChanY, Ipin, Opin };
enum class BlockKind : std::uint8_t { PLB, IOB };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
  case NodeKind::ChanX: return "chanx";
  case NodeKind::ChanY: return "chany";
  case NodeKind::Ipin: return "ipin";
  case NodeKind::Opin: return "opin";
  }
  return "?";
}

inline std::string_view to_string(BlockKind k) { return k == BlockKind::PLB ? "PLB" : "IOB"; }

enum class EquitemporalGeometry : std::uint8_t { Diagonal, ChannelPerpendicular };

struct RrNode {
  NodeKind kind = NodeKind::ChanX;
  int x = 0;
  int y = 0;
  int track = -1;   // channel nodes
  int segment = -1; // channel nodes
  int block = -1;   // pins: global block index
  int pin = -1;     // pins: pin index inside the block (inputs first)
  double r = 0.0;
  double c = 0.0;
  int equitemporal_class = -1;

  bool is_channel() const { return kind == NodeKind::ChanX || kind == NodeKind::ChanY; }
};

enum class SwitchOwner : std::uint8_t { PlbCbox, IobCbox, Switchbox };

struct RrSwitch {
  NodeId from = no_node;
  NodeId to = no_node;
  bool bidirectional = false;
  double r = 0.0;
  double c = 0.0;
  int config_bit = -1;
  SwitchOwner owner = SwitchOwner::Switchbox;
  int owner_x = 0; // tile of the owning box
  int owner_y = 0;
};

enum class ConfigBitKind : std::uint8_t { PlbInternal, PlbCbox, IobConfig, IobCbox, Switchbox };

struct ConfigBit {
  ConfigBitKind kind = ConfigBitKind::PlbInternal;
  int block = -1;      // PLB or IOB global block index, -1 for switchboxes
  int local = 0;       // index inside the owning block's internal bits
  SwitchId sw = -1;    // routing switch, -1 for internal bits
};

struct BlockInfo {
  BlockKind kind = BlockKind::PLB;
  int x = 0; // PLBs: grid position; IOBs: ring position (-1 or grid_w/grid_h on one axis)
  int y = 0;
  int num_inputs = 0;
  int num_outputs = 0;
  NodeId first_pin = no_node;
  int channel_segment = -1; // IOB: the channel its pins attach to
};

struct Arc {
  NodeId to = no_node;
  SwitchId sw = -1;
};

/// Routing-resource graph of a mesh fabric. Immutable after construction.
class RrGraph {
public:
  explicit RrGraph(const ArchSpec& arch);

  const ArchSpec& arch() const { return arch_; }
  const std::vector<RrNode>& nodes() const { return nodes_; }
  const std::vector<RrSwitch>& switches() const { return switches_; }
  const std::vector<ConfigBit>& config_bits() const { return config_; }
  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  const RrNode& node(NodeId n) const { return nodes_[static_cast<std::size_t>(n)]; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t total_config_bits() const { return config_.size(); }
  int channel_width() const { return arch_.channel_width; }
  int num_segments() const { return num_hseg_ + num_vseg_; }
  EquitemporalGeometry equitemporal_geometry() const {
    return arch_.switchbox_kind == SwitchboxKind::Subset ? EquitemporalGeometry::Diagonal
                                                         : EquitemporalGeometry::ChannelPerpendicular;
  }
  bool flagged_unverified() const {
    return arch_.switchbox_kind == SwitchboxKind::TwistAlways &&
           arch_.driver_mode == DriverMode::SingleDriver;
  }

  const std::vector<Arc>& fanout(NodeId n) const { return out_[static_cast<std::size_t>(n)]; }
  const std::vector<Arc>& fanin(NodeId n) const { return in_[static_cast<std::size_t>(n)]; }

  // Switch driving `to` from `from`, if any.
  std::optional<SwitchId> find_switch(NodeId from, NodeId to) const {
    const auto& arcs = fanout(from);
    auto it = std::lower_bound(arcs.begin(), arcs.end(), to,
                               [](const Arc& a, NodeId v) { return a.to < v; });
    if (it != arcs.end() && it->to == to) return it->sw;
    return std::nullopt;
  }

  int hseg(int x, int y) const { return y * arch_.grid_w + x; }
  int vseg(int x, int y) const { return num_hseg_ + y * (arch_.grid_w + 1) + x; }
  NodeId chan_node(int segment, int track) const {
    return static_cast<NodeId>(segment * arch_.channel_width + track);
  }
  int plb_index(int x, int y) const { return y * arch_.grid_w + x; }

  // Global block index of the PLB at (x, y) or the IOB at ring position (x, y).
  std::optional<int> block_at(int x, int y) const;
  NodeId pin_node(int block, int pin) const {
    return blocks_[static_cast<std::size_t>(block)].first_pin + pin;
  }
  NodeId input_pin(int block, int k) const { return pin_node(block, k); }
  NodeId output_pin(int block, int k) const {
    return pin_node(block, blocks_[static_cast<std::size_t>(block)].num_inputs + k);
  }

  /// Canonical text dump: header, node list, switch list.
  std::string serialize() const;

private:
  void add_switch(NodeId from, NodeId to, bool bidir, SwitchOwner owner, int tx, int ty,
                  ConfigBitKind kind, int block);
  void add_cbox(int block, int segment, double fc, int tx, int ty, ConfigBitKind kind,
                SwitchOwner owner);
  void add_switchbox(int bx, int by);
  NodeId terminal_node(int bx, int by, Terminal t) const;

  ArchSpec arch_;
  int num_hseg_ = 0;
  int num_vseg_ = 0;
  std::vector<RrNode> nodes_;
  std::vector<RrSwitch> switches_;
  std::vector<ConfigBit> config_;
  std::vector<BlockInfo> blocks_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> in_;
};

inline RrGraph::RrGraph(const ArchSpec& arch) : arch_(arch) {
  arch_.validate();
  const int w = arch_.grid_w, h = arch_.grid_h, W = arch_.channel_width;
  num_hseg_ = w * (h + 1);
  num_vseg_ = h * (w + 1);

  // Channel nodes, segment-major then track.
  for (int s = 0; s < num_hseg_ + num_vseg_; ++s) {
    const bool horiz = s < num_hseg_;
    int x, y;
    if (horiz) {
      x = s % w;
      y = s / w;
    } else {
      x = (s - num_hseg_) % (w + 1);
      y = (s - num_hseg_) / (w + 1);
    }
    for (int t = 0; t < W; ++t) {
      RrNode n;
      n.kind = horiz ? NodeKind::ChanX : NodeKind::ChanY;
      n.x = x;
      n.y = y;
      n.track = t;
      n.segment = s;
      n.r = arch_.segment_r;
      n.c = arch_.segment_c;
      // Every track of a segment lies on one wave front from a common driver.
      n.equitemporal_class = s;
      nodes_.push_back(n);
    }
  }

  auto add_block = [&](BlockKind kind, int x, int y, int ni, int no, int chan) {
    BlockInfo b{kind, x, y, ni, no, static_cast<NodeId>(nodes_.size()), chan};
    const int idx = static_cast<int>(blocks_.size());
    for (int p = 0; p < ni + no; ++p) {
      RrNode n;
      n.kind = p < ni ? NodeKind::Ipin : NodeKind::Opin;
      n.x = x;
      n.y = y;
      n.block = idx;
      n.pin = p;
      nodes_.push_back(n);
    }
    blocks_.push_back(b);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      add_block(BlockKind::PLB, x, y, arch_.plb_inputs, arch_.plb_outputs, -1);
  // IOB ring: bottom, right, top, left.
  for (int x = 0; x < w; ++x)
    add_block(BlockKind::IOB, x, -1, arch_.iob_inputs, arch_.iob_outputs, hseg(x, 0));
  for (int y = 0; y < h; ++y)
    add_block(BlockKind::IOB, w, y, arch_.iob_inputs, arch_.iob_outputs, vseg(w, y));
  for (int x = 0; x < w; ++x)
    add_block(BlockKind::IOB, x, h, arch_.iob_inputs, arch_.iob_outputs, hseg(x, h));
  for (int y = 0; y < h; ++y)
    add_block(BlockKind::IOB, -1, y, arch_.iob_inputs, arch_.iob_outputs, vseg(0, y));

  out_.resize(nodes_.size());
  in_.resize(nodes_.size());

  // Tiles cover the switchbox lattice; row-major snake.
  for (int ty = 0; ty <= h; ++ty) {
    for (int k = 0; k <= w; ++k) {
      const int tx = ty % 2 == 0 ? k : w - k;
      if (tx < w && ty < h) {
        const int b = plb_index(tx, ty);
        for (int i = 0; i < plb_config_bits; ++i)
          config_.push_back({ConfigBitKind::PlbInternal, b, i, -1});
        add_cbox(b, -1, arch_.fc_plb, tx, ty, ConfigBitKind::PlbCbox, SwitchOwner::PlbCbox);
      }
      for (int side = 0; side < 4; ++side) {
        std::optional<int> iob;
        const int base = w * h;
        if (side == 0 && ty == 0 && tx < w) iob = base + tx;
        if (side == 1 && tx == w && ty < h) iob = base + w + ty;
        if (side == 2 && ty == h && tx < w) iob = base + w + h + tx;
        if (side == 3 && tx == 0 && ty < h) iob = base + 2 * w + h + ty;
        if (!iob) continue;
        for (int i = 0; i < iob_config_bits; ++i)
          config_.push_back({ConfigBitKind::IobConfig, *iob, i, -1});
        add_cbox(*iob, blocks_[static_cast<std::size_t>(*iob)].channel_segment, arch_.fc_iob, tx,
                 ty, ConfigBitKind::IobCbox, SwitchOwner::IobCbox);
      }
      add_switchbox(tx, ty);
    }
  }

  auto by_target = [](const Arc& a, const Arc& b) { return a.to < b.to || (a.to == b.to && a.sw < b.sw); };
  for (auto& v : out_) std::sort(v.begin(), v.end(), by_target);
  for (auto& v : in_) std::sort(v.begin(), v.end(), by_target);
}

inline void RrGraph::add_switch(NodeId from, NodeId to, bool bidir, SwitchOwner owner, int tx,
                                int ty, ConfigBitKind kind, int block) {
  const auto id = static_cast<SwitchId>(switches_.size());
  RrSwitch s;
  s.from = from;
  s.to = to;
  s.bidirectional = bidir;
  s.r = arch_.switch_r;
  s.c = arch_.switch_c;
  s.config_bit = static_cast<int>(config_.size());
  s.owner = owner;
  s.owner_x = tx;
  s.owner_y = ty;
  switches_.push_back(s);
  config_.push_back({kind, block, -1, id});
  out_[static_cast<std::size_t>(from)].push_back({to, id});
  in_[static_cast<std::size_t>(to)].push_back({from, id});
  if (bidir) {
    out_[static_cast<std::size_t>(to)].push_back({from, id});
    in_[static_cast<std::size_t>(from)].push_back({to, id});
  }
}

// PLB inputs attach to the channel above the block, outputs to the channel at its
// right; IOB pins attach to the adjacent ring channel.
inline void RrGraph::add_cbox(int block, int segment, double fc, int tx, int ty, ConfigBitKind kind,
                              SwitchOwner owner) {
  const auto& b = blocks_[static_cast<std::size_t>(block)];
  const int pins = b.num_inputs + b.num_outputs;
  if (pins == 0) return;
  const auto plan = build_crossbar(arch_.channel_width, pins, fc);
  for (const auto& sp : plan.switch_points) {
    const bool input = sp.pin < b.num_inputs;
    int seg = segment;
    if (b.kind == BlockKind::PLB) seg = input ? hseg(b.x, b.y + 1) : vseg(b.x + 1, b.y);
    const NodeId chan = chan_node(seg, sp.track);
    const NodeId pin = b.first_pin + sp.pin;
    if (input) add_switch(chan, pin, false, owner, tx, ty, kind, block);
    else add_switch(pin, chan, false, owner, tx, ty, kind, block);
  }
}

inline NodeId RrGraph::terminal_node(int bx, int by, Terminal t) const {
  int seg = -1;
  switch (t.side) {
  case Left: seg = hseg(bx - 1, by); break;
  case Right: seg = hseg(bx, by); break;
  case Top: seg = vseg(bx, by); break;
  case Bottom: seg = vseg(bx, by - 1); break;
  }
  return chan_node(seg, t.index);
}

inline void RrGraph::add_switchbox(int bx, int by) {
  const std::array<bool, 4> present{bx > 0, by < arch_.grid_h, bx < arch_.grid_w, by > 0};
  const auto set = build_switchbox(arch_.switchbox_kind, arch_.channel_width, arch_.driver_mode,
                                   present);
  const bool bidir = arch_.driver_mode == DriverMode::Bidirectional;
  for (const auto& p : set.pairs)
    add_switch(terminal_node(bx, by, p.a), terminal_node(bx, by, p.b), bidir,
               SwitchOwner::Switchbox, bx, by, ConfigBitKind::Switchbox, -1);
}

inline std::optional<int> RrGraph::block_at(int x, int y) const {
  const int w = arch_.grid_w, h = arch_.grid_h;
  if (x >= 0 && x < w && y >= 0 && y < h) return plb_index(x, y);
  const int base = w * h;
  if (y == -1 && x >= 0 && x < w) return base + x;
  if (x == w && y >= 0 && y < h) return base + w + y;
  if (y == h && x >= 0 && x < w) return base + w + h + x;
  if (x == -1 && y >= 0 && y < h) return base + 2 * w + h + y;
  return std::nullopt;
}

inline std::string RrGraph::serialize() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "rrgraph v1\n" << to_text(arch_);
  os << "nodes " << nodes_.size() << '\n';
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    os << i << ' ' << to_string(n.kind) << ' ' << n.x << ' ' << n.y << ' ';
    if (n.is_channel()) os << "seg=" << n.segment << " track=" << n.track;
    else os << "block=" << n.block << " pin=" << n.pin;
    os << " r=" << n.r << " c=" << n.c << " eq=" << n.equitemporal_class << '\n';
  }
  os << "switches " << switches_.size() << '\n';
  for (std::size_t i = 0; i < switches_.size(); ++i) {
    const auto& s = switches_[i];
    os << i << ' ' << s.from << (s.bidirectional ? " <-> " : " -> ") << s.to << " r=" << s.r
       << " c=" << s.c << " bit=" << s.config_bit << " tile=" << s.owner_x << ',' << s.owner_y
       << '\n';
  }
  os << "config_bits " << config_.size() << '\n';
  return os.str();
}

} // namespace secfpga
