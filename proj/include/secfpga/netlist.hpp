#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "secfpga/rr_graph.hpp"
#include "secfpga/text.hpp"

namespace secfpga {

// Pin reference "<block>:o<k>" (output k) or "<block>:i<k>" (input k).
struct PinRef {
  std::string block;
  bool output = false;
  int index = 0;

  bool operator==(const PinRef&) const = default;
  auto operator<=>(const PinRef&) const = default;
};

inline std::string to_string(const PinRef& p) {
  return p.block + (p.output ? ":o" : ":i") + std::to_string(p.index);
}

inline PinRef parse_pin(std::string_view s) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon + 2 > s.size())
    throw ValidationError("bad pin reference '" + std::string(s) + "'");
  PinRef p;
  p.block = std::string(s.substr(0, colon));
  const char dir = s[colon + 1];
  if (dir != 'o' && dir != 'i') throw ValidationError("bad pin direction in '" + std::string(s) + "'");
  p.output = dir == 'o';
  p.index = parse_int(s.substr(colon + 2));
  return p;
}

struct NetlistBlock {
  std::string id;
  BlockKind kind = BlockKind::PLB;
  int x = 0;
  int y = 0;
  std::string gate; // optional gate-library entry mapped into the PLB
};

struct Net {
  std::string id;
  PinRef source;
  std::vector<PinRef> sinks;
};

struct DualPair {
  std::string rail1;
  std::string rail0;
};

/// Placed netlist. PLB blocks sit at grid positions; IOBs at ring positions
/// (y = -1 bottom, x = grid_w right, y = grid_h top, x = -1 left).
struct PlacedNetlist {
  std::string name = "netlist";
  int grid_w = 0; // 0: take the grid from the architecture
  int grid_h = 0;
  std::vector<NetlistBlock> blocks;
  std::vector<Net> nets;
  std::vector<DualPair> dual_pairs;

  std::optional<std::size_t> net_index(const std::string& id) const {
    for (std::size_t i = 0; i < nets.size(); ++i)
      if (nets[i].id == id) return i;
    return std::nullopt;
  }
  const NetlistBlock* block(const std::string& id) const {
    for (const auto& b : blocks)
      if (b.id == id) return &b;
    return nullptr;
  }
};

// Net endpoints resolved to graph nodes.
struct ResolvedNet {
  NodeId source = no_node;
  std::vector<NodeId> sinks;
};

struct ResolvedPair {
  std::size_t rail1 = 0;
  std::size_t rail0 = 0;
};

struct ResolvedNetlist {
  std::vector<ResolvedNet> nets;
  std::vector<ResolvedPair> pairs;
  std::vector<int> pair_of; // net -> pair index or -1
};

/// Checks the netlist against the fabric and maps every pin to its node.
inline ResolvedNetlist resolve(const PlacedNetlist& nl, const RrGraph& g) {
  std::map<std::string, int> block_index;
  for (const auto& b : nl.blocks) {
    if (block_index.count(b.id)) throw ValidationError("duplicate block '" + b.id + "'");
    auto idx = g.block_at(b.x, b.y);
    if (!idx) throw ValidationError("block '" + b.id + "' lies outside the fabric");
    if (g.blocks()[static_cast<std::size_t>(*idx)].kind != b.kind)
      throw ValidationError("block '" + b.id + "' kind does not match its location");
    for (const auto& [other, i] : block_index)
      if (i == *idx) throw ValidationError("blocks '" + other + "' and '" + b.id + "' overlap");
    block_index[b.id] = *idx;
  }

  auto pin_node = [&](const PinRef& p) {
    auto it = block_index.find(p.block);
    if (it == block_index.end()) throw ValidationError("unknown block '" + p.block + "'");
    const auto& info = g.blocks()[static_cast<std::size_t>(it->second)];
    const int count = p.output ? info.num_outputs : info.num_inputs;
    if (p.index < 0 || p.index >= count)
      throw ValidationError("pin " + to_string(p) + " out of range");
    return p.output ? g.output_pin(it->second, p.index) : g.input_pin(it->second, p.index);
  };

  ResolvedNetlist r;
  std::set<NodeId> used;
  std::set<std::string> ids;
  for (const auto& n : nl.nets) {
    if (!ids.insert(n.id).second) throw ValidationError("duplicate net '" + n.id + "'");
    if (!n.source.output) throw ValidationError("net '" + n.id + "' source must be an output pin");
    if (n.sinks.empty()) throw ValidationError("net '" + n.id + "' has no sinks");
    ResolvedNet rn;
    rn.source = pin_node(n.source);
    if (!used.insert(rn.source).second)
      throw ValidationError("pin " + to_string(n.source) + " used by two nets");
    for (const auto& s : n.sinks) {
      if (s.output) throw ValidationError("net '" + n.id + "' sink must be an input pin");
      auto node = pin_node(s);
      if (!used.insert(node).second) throw ValidationError("pin " + to_string(s) + " used by two nets");
      rn.sinks.push_back(node);
    }
    r.nets.push_back(std::move(rn));
  }

  r.pair_of.assign(nl.nets.size(), -1);
  for (const auto& p : nl.dual_pairs) {
    auto a = nl.net_index(p.rail1), b = nl.net_index(p.rail0);
    if (!a || !b) throw ValidationError("pair references unknown net");
    if (*a == *b) throw ValidationError("pair rails must be distinct nets");
    if (r.pair_of[*a] >= 0 || r.pair_of[*b] >= 0)
      throw ValidationError("net paired twice: " + p.rail1 + "/" + p.rail0);
    const auto& n1 = nl.nets[*a];
    const auto& n0 = nl.nets[*b];
    bool same = n1.source.block == n0.source.block && n1.sinks.size() == n0.sinks.size();
    for (std::size_t k = 0; same && k < n1.sinks.size(); ++k) same = n1.sinks[k].block == n0.sinks[k].block;
    if (!same)
      throw ValidationError("rails " + p.rail1 + "/" + p.rail0 + " must join the same blocks");
    r.pair_of[*a] = r.pair_of[*b] = static_cast<int>(r.pairs.size());
    r.pairs.push_back({*a, *b});
  }
  return r;
}

/// The template architecture resized to the netlist's declared grid.
inline ArchSpec arch_for(const PlacedNetlist& nl, ArchSpec tmpl) {
  if (nl.grid_w > 0) {
    tmpl.grid_w = nl.grid_w;
    tmpl.grid_h = nl.grid_h;
  }
  return tmpl;
}

inline BlockKind parse_block_kind(std::string_view s) {
  if (s == "PLB" || s == "plb") return BlockKind::PLB;
  if (s == "IOB" || s == "iob") return BlockKind::IOB;
  throw ValidationError("unknown block kind '" + std::string(s) + "'");
}

// Parses one netlist statement; returns false when the keyword is not a netlist one.
inline bool parse_netlist_statement(PlacedNetlist& nl, const std::vector<std::string_view>& tok) {
  if (tok[0] == "name") {
    if (tok.size() != 2) throw ValidationError("expected: name <id>");
    nl.name = std::string(tok[1]);
  } else if (tok[0] == "grid") {
    if (tok.size() != 3) throw ValidationError("expected: grid w h");
    nl.grid_w = parse_int(tok[1]);
    nl.grid_h = parse_int(tok[2]);
    if (nl.grid_w < 1 || nl.grid_h < 1) throw ValidationError("grid must be at least 1x1");
  } else if (tok[0] == "block") {
    if (tok.size() != 5 && tok.size() != 6) throw ValidationError("expected: block id kind x y [gate]");
    NetlistBlock b{std::string(tok[1]), parse_block_kind(tok[2]), parse_int(tok[3]), parse_int(tok[4]),
                   tok.size() == 6 ? std::string(tok[5]) : std::string()};
    nl.blocks.push_back(std::move(b));
  } else if (tok[0] == "net") {
    if (tok.size() < 4) throw ValidationError("expected: net id src_pin sink_pin...");
    Net n{std::string(tok[1]), parse_pin(tok[2]), {}};
    for (std::size_t i = 3; i < tok.size(); ++i) n.sinks.push_back(parse_pin(tok[i]));
    nl.nets.push_back(std::move(n));
  } else if (tok[0] == "pair") {
    if (tok.size() != 3) throw ValidationError("expected: pair rail1 rail0");
    nl.dual_pairs.push_back({std::string(tok[1]), std::string(tok[2])});
  } else {
    return false;
  }
  return true;
}

inline PlacedNetlist parse_netlist(std::istream& in, const std::string& name = "<netlist>") {
  PlacedNetlist nl;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(trim(strip_comment(line)));
    if (tok.empty()) continue;
    try {
      if (!parse_netlist_statement(nl, tok))
        throw ValidationError("unknown statement '" + std::string(tok[0]) + "'");
    } catch (const ValidationError& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  return nl;
}

inline PlacedNetlist load_netlist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open netlist '" + path + "'");
  return parse_netlist(in, path);
}

inline std::string to_text(const PlacedNetlist& nl) {
  std::ostringstream os;
  os << "name " << nl.name << '\n';
  if (nl.grid_w > 0) os << "grid " << nl.grid_w << ' ' << nl.grid_h << '\n';
  for (const auto& b : nl.blocks) {
    os << "block " << b.id << ' ' << to_string(b.kind) << ' ' << b.x << ' ' << b.y;
    if (!b.gate.empty()) os << ' ' << b.gate;
    os << '\n';
  }
  for (const auto& n : nl.nets) {
    os << "net " << n.id << ' ' << to_string(n.source);
    for (const auto& s : n.sinks) os << ' ' << to_string(s);
    os << '\n';
  }
  for (const auto& p : nl.dual_pairs) os << "pair " << p.rail1 << ' ' << p.rail0 << '\n';
  return os.str();
}

} // namespace secfpga
