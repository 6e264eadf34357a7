#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "secfpga/error.hpp"
#include "secfpga/text.hpp"

namespace secfpga {

// Wire pair (DATA0, DATA1).
enum class DualRailValue : std::uint8_t { Null, Zero, One, Invalid };

inline DualRailValue make_dual_rail(bool data0, bool data1) {
  if (data0 && data1) return DualRailValue::Invalid;
  if (data1) return DualRailValue::One;
  if (data0) return DualRailValue::Zero;
  return DualRailValue::Null;
}
inline bool rail0(DualRailValue v) { return v == DualRailValue::Zero || v == DualRailValue::Invalid; }
inline bool rail1(DualRailValue v) { return v == DualRailValue::One || v == DualRailValue::Invalid; }
inline bool is_valid(DualRailValue v) { return v == DualRailValue::Zero || v == DualRailValue::One; }

inline std::string_view to_string(DualRailValue v) {
  switch (v) {
  case DualRailValue::Null: return "Null";
  case DualRailValue::Zero: return "Zero";
  case DualRailValue::One: return "One";
  case DualRailValue::Invalid: return "Invalid";
  }
  return "?";
}

/// Rails of a 2-input gate as truth tables indexed by (x << 1) | y.
struct GateFunction {
  std::array<bool, 4> f1{};
  std::array<bool, 4> f0{};

  static GateFunction from_f1(std::array<bool, 4> f1) {
    GateFunction g;
    g.f1 = f1;
    for (int i = 0; i < 4; ++i) g.f0[static_cast<std::size_t>(i)] = !f1[static_cast<std::size_t>(i)];
    return g;
  }
  static GateFunction from_f1_bits(unsigned bits) {
    std::array<bool, 4> f{};
    for (int i = 0; i < 4; ++i) f[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
    return from_f1(f);
  }
  bool complete() const {
    for (int i = 0; i < 4; ++i)
      if (f1[static_cast<std::size_t>(i)] == f0[static_cast<std::size_t>(i)]) return false;
    return true;
  }
};

enum class LutInput : std::uint8_t { O0, O1, AckIn, X1, X0, Y1, Y0 };

struct LutPair {
  std::uint64_t table_o0 = 0;
  std::uint64_t table_o1 = 0;
  // Address bits, most significant first.
  std::array<LutInput, 6> wiring_o0{LutInput::O0, LutInput::AckIn, LutInput::X1,
                                    LutInput::X0, LutInput::Y1,    LutInput::Y0};
  std::array<LutInput, 6> wiring_o1{LutInput::AckIn, LutInput::O1, LutInput::X1,
                                    LutInput::X0,    LutInput::Y1, LutInput::Y0};
  bool balanced_implementation = true;

  bool operator==(const LutPair&) const = default;
};

namespace detail {

struct PlbWires {
  bool o0, o1, ack, x1, x0, y1, y0;
  bool get(LutInput i) const {
    switch (i) {
    case LutInput::O0: return o0;
    case LutInput::O1: return o1;
    case LutInput::AckIn: return ack;
    case LutInput::X1: return x1;
    case LutInput::X0: return x0;
    case LutInput::Y1: return y1;
    case LutInput::Y0: return y0;
    }
    return false;
  }
};

inline unsigned lut_address(const std::array<LutInput, 6>& wiring, const PlbWires& w) {
  unsigned a = 0;
  for (auto in : wiring) a = (a << 1) | (w.get(in) ? 1u : 0u);
  return a;
}

inline bool lut_read(std::uint64_t table, unsigned addr) { return (table >> addr) & 1u; }

} // namespace detail

/// Fills both LUT6 tables: evaluate when x and y are both valid codewords with
/// ACKIN = 0, reset when both are Null with ACKIN = 1, hold through the feedback
/// input otherwise.
inline LutPair synthesize_lut_pair(const GateFunction& f) {
  if (!f.complete()) throw ValidationError("gate function is not dual-rail complete");
  LutPair p;
  auto fill = [&](const std::array<LutInput, 6>& wiring, LutInput self, const std::array<bool, 4>& rail) {
    std::uint64_t t = 0;
    for (unsigned a = 0; a < 64; ++a) {
      detail::PlbWires w{};
      for (int k = 0; k < 6; ++k) {
        const bool bit = (a >> (5 - k)) & 1u;
        switch (wiring[static_cast<std::size_t>(k)]) {
        case LutInput::O0: w.o0 = bit; break;
        case LutInput::O1: w.o1 = bit; break;
        case LutInput::AckIn: w.ack = bit; break;
        case LutInput::X1: w.x1 = bit; break;
        case LutInput::X0: w.x0 = bit; break;
        case LutInput::Y1: w.y1 = bit; break;
        case LutInput::Y0: w.y0 = bit; break;
        }
      }
      const auto x = make_dual_rail(w.x0, w.x1), y = make_dual_rail(w.y0, w.y1);
      bool out;
      if (is_valid(x) && is_valid(y) && !w.ack)
        out = rail[static_cast<std::size_t>(((x == DualRailValue::One) << 1) | (y == DualRailValue::One))];
      else if (x == DualRailValue::Null && y == DualRailValue::Null && w.ack)
        out = false;
      else
        out = w.get(self);
      if (out) t |= std::uint64_t{1} << a;
    }
    return t;
  };
  p.table_o0 = fill(p.wiring_o0, LutInput::O0, f.f0);
  p.table_o1 = fill(p.wiring_o1, LutInput::O1, f.f1);
  return p;
}

struct PlbStimulus {
  DualRailValue x = DualRailValue::Null;
  DualRailValue y = DualRailValue::Null;
  bool ackin = false;
};

struct PlbOutput {
  DualRailValue out = DualRailValue::Null;
  bool s_out = false;
  bool operator==(const PlbOutput&) const = default;
};

/// Gate instance with its feedback state. Strict mode enforces the 4-phase
/// protocol on each input: no Invalid codeword and a Null spacer between
/// successive valid codewords.
class PlbSimulator {
public:
  explicit PlbSimulator(LutPair luts, bool strict = true) : luts_(luts), strict_(strict) {}

  PlbOutput step(const PlbStimulus& s) {
    if (strict_) {
      check(s.x, last_x_, "x");
      check(s.y, last_y_, "y");
    }
    detail::PlbWires w{o0_, o1_, s.ackin, rail1(s.x), rail0(s.x), rail1(s.y), rail0(s.y)};
    const bool n0 = detail::lut_read(luts_.table_o0, detail::lut_address(luts_.wiring_o0, w));
    const bool n1 = detail::lut_read(luts_.table_o1, detail::lut_address(luts_.wiring_o1, w));
    o0_ = n0;
    o1_ = n1;
    last_x_ = s.x;
    last_y_ = s.y;
    ++step_;
    return {make_dual_rail(o0_, o1_), o1_ != o0_};
  }

  DualRailValue output() const { return make_dual_rail(o0_, o1_); }

private:
  void check(DualRailValue v, DualRailValue prev, const char* name) const {
    if (v == DualRailValue::Invalid)
      throw ProtocolError(step_, std::string("invalid codeword on input ") + name);
    if (is_valid(v) && is_valid(prev) && v != prev)
      throw ProtocolError(step_, std::string("input ") + name + " changed value without a Null spacer");
  }

  LutPair luts_;
  bool strict_;
  bool o0_ = false, o1_ = false;
  DualRailValue last_x_ = DualRailValue::Null, last_y_ = DualRailValue::Null;
  std::size_t step_ = 0;
};

inline std::vector<PlbOutput> simulate_plb(const LutPair& luts, const std::vector<PlbStimulus>& stimulus,
                                           bool strict = true) {
  PlbSimulator sim(luts, strict);
  std::vector<PlbOutput> out;
  out.reserve(stimulus.size());
  for (const auto& s : stimulus) out.push_back(sim.step(s));
  return out;
}

enum class ProtocolStyle { TwoPhaseEdge, TwoPhaseLedr, FourPhase };
enum class MappingConfig { A, B, C }; // dual-rail 2-input, dual-rail 3-input, triple-rail 2-input

/// PLBs needed per gate; nullopt where the style cannot be mapped.
inline std::optional<double> mapping_capacity(ProtocolStyle style, MappingConfig cfg) {
  static constexpr double na = -1;
  static constexpr double table[3][3] = {{1, na, na}, {0.5, 1, na}, {0.5, 1, 2}};
  const double v = table[static_cast<int>(style)][static_cast<int>(cfg)];
  if (v < 0) return std::nullopt;
  return v;
}

inline std::string table_hex(std::uint64_t t) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, t >>= 4) s[static_cast<std::size_t>(i)] = digits[t & 0xf];
  return s;
}

inline std::uint64_t parse_table_hex(std::string_view s) {
  if (s.size() != 16) throw ValidationError("LUT table must be 16 hex digits");
  std::uint64_t t = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw ValidationError("bad hex digit in LUT table");
    t = (t << 4) | static_cast<std::uint64_t>(d);
  }
  return t;
}

struct LibraryGate {
  std::string name;
  GateFunction function;
};

/// Gate library lines: `<name> <f1>` with f1 as four 0/1 digits for (x,y) = 00, 01, 10, 11.
inline std::vector<LibraryGate> parse_gate_library(std::istream& in, const std::string& name = "<gates>") {
  std::vector<LibraryGate> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(trim(strip_comment(line)));
    if (tok.empty()) continue;
    if (tok.size() != 2 || tok[1].size() != 4 || tok[1].find_first_not_of("01") != std::string_view::npos)
      throw ParseError(name, lineno, "expected: <name> <four 0/1 digits>");
    std::array<bool, 4> f{};
    for (std::size_t i = 0; i < 4; ++i) f[i] = tok[1][i] == '1';
    out.push_back({std::string(tok[0]), GateFunction::from_f1(f)});
  }
  return out;
}

inline std::vector<LibraryGate> load_gate_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open gate library '" + path + "'");
  return parse_gate_library(in, path);
}

} // namespace secfpga
