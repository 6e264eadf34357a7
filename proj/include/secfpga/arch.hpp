#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>

#include "secfpga/error.hpp"
#include "secfpga/text.hpp"

namespace secfpga {

enum class SwitchboxKind { Subset, TwistOnTurn, TwistAlways };
enum class DriverMode { Bidirectional, SingleDriver };

inline std::string_view to_string(SwitchboxKind k) {
  switch (k) {
  case SwitchboxKind::Subset: return "subset";
  case SwitchboxKind::TwistOnTurn: return "twist_on_turn";
  case SwitchboxKind::TwistAlways: return "twist_always";
  }
  throw ConfigurationError("unknown switchbox kind");
}

inline std::string_view to_string(DriverMode m) {
  switch (m) {
  case DriverMode::Bidirectional: return "bidirectional";
  case DriverMode::SingleDriver: return "single_driver";
  }
  throw ConfigurationError("unknown driver mode");
}

inline SwitchboxKind parse_switchbox_kind(std::string_view s) {
  if (s == "subset") return SwitchboxKind::Subset;
  if (s == "twist_on_turn") return SwitchboxKind::TwistOnTurn;
  if (s == "twist_always") return SwitchboxKind::TwistAlways;
  throw ConfigurationError("unknown switchbox kind '" + std::string(s) + "'");
}

inline DriverMode parse_driver_mode(std::string_view s) {
  if (s == "bidirectional") return DriverMode::Bidirectional;
  if (s == "single_driver") return DriverMode::SingleDriver;
  throw ConfigurationError("unknown driver mode '" + std::string(s) + "'");
}

// Tracks reachable by each pin of a connection box with flexibility fc.
inline int tracks_per_pin(int channel_width, double fc) {
  const long k = std::lround(fc * channel_width);
  return static_cast<int>(k < 1 ? 1 : k);
}

/// Architectural parameters of the mesh fabric. Defaults describe the 3x3
/// prototype: W = 8, 12 PLB inputs, 7 PLB outputs, 3+3 IOB pins, Fc 1.0/0.5.
///
/// Resistances and capacitances are in abstract units; a channel segment spans
/// one tile.
struct ArchSpec {
  int grid_w = 3;
  int grid_h = 3;
  int channel_width = 8;
  SwitchboxKind switchbox_kind = SwitchboxKind::Subset;
  DriverMode driver_mode = DriverMode::Bidirectional;
  int plb_inputs = 12;
  int plb_outputs = 7;
  int iob_inputs = 3;
  int iob_outputs = 3;
  double fc_plb = 1.0;
  double fc_iob = 0.5;
  double segment_r = 1.0;
  double segment_c = 1.0;
  double switch_r = 0.5;
  double switch_c = 0.1;

  bool operator==(const ArchSpec&) const = default;

  void validate() const {
    if (grid_w < 1 || grid_h < 1) throw ValidationError("grid dimensions must be >= 1");
    if (channel_width < 1) throw ValidationError("channel_width must be >= 1");
    if (plb_inputs < 0 || plb_outputs < 0 || iob_inputs < 0 || iob_outputs < 0)
      throw ValidationError("pin counts must be non-negative");
    for (double fc : {fc_plb, fc_iob}) {
      if (!(fc > 0.0 && fc <= 1.0)) throw ValidationError("Fc must lie in (0, 1]");
      if (std::lround(fc * channel_width) < 1)
        throw ValidationError("Fc * W must round to an integer >= 1");
    }
    if (!(segment_r > 0 && segment_c > 0 && switch_r > 0 && switch_c > 0))
      throw ValidationError("RC parameters must be positive");
    if (driver_mode == DriverMode::SingleDriver && channel_width % 2 != 0)
      throw ValidationError("single-driver fabrics need an even channel width");
  }

  int num_iobs() const { return 2 * (grid_w + grid_h); }
};

/// Writes the canonical key=value form (one key per line, fixed order).
inline std::string to_text(const ArchSpec& a) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "grid_w=" << a.grid_w << '\n'
     << "grid_h=" << a.grid_h << '\n'
     << "channel_width=" << a.channel_width << '\n'
     << "switchbox_kind=" << to_string(a.switchbox_kind) << '\n'
     << "driver_mode=" << to_string(a.driver_mode) << '\n'
     << "plb_inputs=" << a.plb_inputs << '\n'
     << "plb_outputs=" << a.plb_outputs << '\n'
     << "iob_inputs=" << a.iob_inputs << '\n'
     << "iob_outputs=" << a.iob_outputs << '\n'
     << "fc_plb=" << a.fc_plb << '\n'
     << "fc_iob=" << a.fc_iob << '\n'
     << "segment_r=" << a.segment_r << '\n'
     << "segment_c=" << a.segment_c << '\n'
     << "switch_r=" << a.switch_r << '\n'
     << "switch_c=" << a.switch_c << '\n';
  return os.str();
}

// Applies one key=value assignment; returns false for an unknown key.
inline bool apply_arch_key(ArchSpec& a, std::string_view key, std::string_view value) {
  if (key == "grid_w") a.grid_w = parse_int(value);
  else if (key == "grid_h") a.grid_h = parse_int(value);
  else if (key == "channel_width" || key == "W") a.channel_width = parse_int(value);
  else if (key == "switchbox_kind") a.switchbox_kind = parse_switchbox_kind(value);
  else if (key == "driver_mode") a.driver_mode = parse_driver_mode(value);
  else if (key == "plb_inputs") a.plb_inputs = parse_int(value);
  else if (key == "plb_outputs") a.plb_outputs = parse_int(value);
  else if (key == "iob_inputs") a.iob_inputs = parse_int(value);
  else if (key == "iob_outputs") a.iob_outputs = parse_int(value);
  else if (key == "fc_plb") a.fc_plb = parse_double(value);
  else if (key == "fc_iob") a.fc_iob = parse_double(value);
  else if (key == "segment_r") a.segment_r = parse_double(value);
  else if (key == "segment_c") a.segment_c = parse_double(value);
  else if (key == "switch_r") a.switch_r = parse_double(value);
  else if (key == "switch_c") a.switch_c = parse_double(value);
  else return false;
  return true;
}

/// Parses an architecture description. Unspecified keys keep their defaults.
/// Blank lines and '#' comments are ignored.
inline ArchSpec parse_arch(std::istream& in, const std::string& name = "<arch>") {
  ArchSpec a;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(strip_comment(line));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(name, lineno, "expected key=value");
    auto key = trim(body.substr(0, eq));
    auto value = trim(body.substr(eq + 1));
    try {
      if (!apply_arch_key(a, key, value))
        throw ParseError(name, lineno, "unknown key '" + std::string(key) + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  try {
    a.validate();
  } catch (const ValidationError& e) {
    throw ParseError(name, lineno, e.what());
  }
  return a;
}

inline ArchSpec parse_arch(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_arch(is);
}

inline ArchSpec load_arch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open architecture file '" + path + "'");
  return parse_arch(in, path);
}

/// FNV-1a over the canonical text; identifies the fabric a bitstream targets.
inline std::uint64_t arch_hash(const ArchSpec& a) {
  return fnv1a(to_text(a));
}

inline std::string arch_hash_hex(const ArchSpec& a) { return hex64(arch_hash(a)); }

} // namespace secfpga
