#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/config_bits.hpp"
#include "secfpga/config_chain.hpp"
#include "secfpga/error.hpp"
#include "secfpga/generator.hpp"
#include "secfpga/netlist.hpp"
#include "secfpga/plbmap.hpp"
#include "secfpga/router.hpp"
#include "secfpga/rr_graph.hpp"
#include "secfpga/sidechannel.hpp"
#include "secfpga/switchbox.hpp"

namespace secfpga::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,
  exit_validation = 2,
  exit_routing = 3,
  exit_deadlock = 4,
  exit_protocol = 5,
  exit_refused = 6,
};

/// Inputs that disagree with each other, e.g. a bitstream built for another fabric.
class RefusalError : public Error {
public:
  using Error::Error;
};

inline constexpr const char* out_dir_env = "SECFPGA_OUT_DIR";
inline constexpr const char* default_out_dir = "secfpga_out";

struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> inputs;    // role, path
  std::vector<std::pair<std::string, std::string>> overrides; // key, value
  std::vector<std::pair<std::string, std::string>> params;
  std::string out_dir;
  std::uint64_t seed = 1;

  bool operator==(const RunManifest&) const = default;
};

inline std::string to_text(const RunManifest& m) {
  std::ostringstream os;
  os << "subcommand=" << m.subcommand << '\n' << "seed=" << m.seed << '\n' << "out_dir=" << m.out_dir << '\n';
  for (const auto& [k, v] : m.inputs) os << "input." << k << '=' << v << '\n';
  for (const auto& [k, v] : m.overrides) os << "set." << k << '=' << v << '\n';
  for (const auto& [k, v] : m.params) os << "param." << k << '=' << v << '\n';
  return os.str();
}

inline RunManifest parse_manifest(std::istream& in, const std::string& name = "<manifest>") {
  RunManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(strip_comment(line));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(name, lineno, "expected key=value");
    const std::string key(trim(t.substr(0, eq))), value(trim(t.substr(eq + 1)));
    auto prefixed = [&](const std::string& p) { return key.rfind(p, 0) == 0 ? key.substr(p.size()) : std::string(); };
    try {
      if (key == "subcommand") m.subcommand = value;
      else if (key == "seed") m.seed = std::stoull(value);
      else if (key == "out_dir") m.out_dir = value;
      else if (auto k = prefixed("input."); !k.empty()) m.inputs.emplace_back(k, value);
      else if (auto k2 = prefixed("set."); !k2.empty()) m.overrides.emplace_back(k2, value);
      else if (auto k3 = prefixed("param."); !k3.empty()) m.params.emplace_back(k3, value);
      else throw ParseError(name, lineno, "unknown manifest key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ParseError(name, lineno, "bad seed '" + value + "'");
    }
  }
  return m;
}

/// Options shared by every subcommand.
struct Common {
  std::string out_dir; // empty: environment variable, then the default
  std::uint64_t seed = 1;
  std::vector<std::string> overrides; // key=value applied to the architecture
  int jobs = 1;
};

inline std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(out_dir_env); env && *env) return env;
  return default_out_dir;
}

/// Output directory that refuses to overwrite any registered input.
class OutputDir {
public:
  OutputDir(const Common& c, std::string subcommand) : dir_(resolve_out_dir(c.out_dir)) {
    manifest_.subcommand = std::move(subcommand);
    manifest_.seed = c.seed;
    manifest_.out_dir = dir_.string();
    for (const auto& o : c.overrides) {
      const auto eq = o.find('=');
      manifest_.overrides.emplace_back(o.substr(0, eq), eq == std::string::npos ? "" : o.substr(eq + 1));
    }
    fs::create_directories(dir_);
  }

  void input(const std::string& role, const std::string& path) {
    manifest_.inputs.emplace_back(role, path);
    inputs_.insert(fs::weakly_canonical(path));
  }
  void param(const std::string& key, const std::string& value) { manifest_.params.emplace_back(key, value); }

  std::string write(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    if (inputs_.count(fs::weakly_canonical(p)))
      throw ValidationError("output '" + p.string() + "' would overwrite an input");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << content;
    written_.push_back(p.string());
    return p.string();
  }

  /// Prefix for text outputs so every file names its seed.
  std::string seed_line() const { return "# seed=" + std::to_string(manifest_.seed) + "\n"; }

  void finish() { write("manifest.txt", to_text(manifest_)); }

  const fs::path& dir() const { return dir_; }
  const RunManifest& manifest() const { return manifest_; }
  const std::vector<std::string>& written() const { return written_; }

private:
  fs::path dir_;
  RunManifest manifest_;
  std::set<fs::path> inputs_;
  std::vector<std::string> written_;
};

inline ArchSpec apply_overrides(ArchSpec a, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ValidationError("override '" + o + "' is not key=value");
    if (!apply_arch_key(a, trim(std::string_view(o).substr(0, eq)), trim(std::string_view(o).substr(eq + 1))))
      throw ValidationError("unknown architecture key '" + o.substr(0, eq) + "'");
  }
  a.validate();
  return a;
}

inline ArchSpec load_arch_with(const std::string& path, const std::vector<std::string>& overrides) {
  return apply_overrides(load_arch(path), overrides);
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; results must be stored by index.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

// arch-report

struct ArchReportArgs {
  std::string arch;
  Common common;
};

namespace detail {

struct BoxStats {
  std::size_t switches = 0;
  int min_degree = 0;
  int max_degree = 0;
};

inline BoxStats box_stats(const ArchSpec& a, const std::array<bool, 4>& present) {
  const auto s = build_switchbox(a.switchbox_kind, a.channel_width, a.driver_mode, present);
  std::map<Terminal, int> degree;
  for (const auto& p : s.pairs) {
    ++degree[p.a];
    ++degree[p.b];
  }
  BoxStats b{s.size(), 0, 0};
  for (auto [t, d] : degree) {
    b.min_degree = b.min_degree == 0 ? d : std::min(b.min_degree, d);
    b.max_degree = std::max(b.max_degree, d);
  }
  return b;
}

} // namespace detail

inline void cmd_arch_report(const ArchReportArgs& args) {
  OutputDir out(args.common, "arch-report");
  out.input("arch", args.arch);
  const ArchSpec a = load_arch_with(args.arch, args.common.overrides);
  const auto count = count_config_bits(a);
  const RrGraph g(a);

  std::ostringstream os;
  os << out.seed_line();
  os << "arch_hash=" << arch_hash_hex(a) << '\n';
  os << to_text(a);
  os << "\nconfiguration bits\n";
  os << std::left << std::setw(22) << "SubModule" << std::setw(8) << "Qty" << std::setw(16) << "SwitchCount"
     << "Total\n";
  for (const auto& r : count.rows)
    os << std::setw(22) << r.submodule << std::setw(8) << r.quantity << std::setw(16) << r.per_unit << r.total
       << '\n';
  os << std::setw(46) << "Total" << count.total << '\n';
  os << "graph_config_bits=" << g.total_config_bits() << '\n';
  if (g.total_config_bits() != static_cast<std::size_t>(count.total))
    os << "warning: graph builder and closed-form count disagree\n";

  os << "\nswitchboxes (" << to_string(a.switchbox_kind) << ", " << to_string(a.driver_mode) << ", W="
     << a.channel_width << ")\n";
  const std::pair<const char*, std::array<bool, 4>> boxes[] = {
      {"full", {true, true, true, true}}, {"half", {true, true, true, false}}, {"quarter", {true, true, false, false}}};
  for (const auto& [name, present] : boxes) {
    const auto s = detail::box_stats(a, present);
    os << name << ": switches=" << s.switches << " terminal_degree=" << s.min_degree;
    if (s.max_degree != s.min_degree) os << ".." << s.max_degree;
    os << '\n';
  }
  os << "acknowledgments_expected=" << count.total << '\n';

  out.write("arch_report.txt", os.str());
  out.write("arch_report.csv", out.seed_line() + config_bits_table(count));
  out.finish();
}

// route

struct RouteArgs {
  std::string arch;
  std::vector<std::string> netlists;
  std::vector<std::string> routers{"bf"};
  bool min_width = false;
  int width_cap = 64;
  RouterParams params;
  Common common;
};

namespace detail {

struct RouteJob {
  std::string dump;
  std::string metrics_row;
  int channel_width = 0;
  bool failed = false;
  std::string failure;
};

inline std::string congestion_report(const Routing& r, const RrGraph& g) {
  std::ostringstream os;
  os << "iterations=" << r.iterations << " overused_nodes=" << r.congested.size() << '\n';
  for (NodeId n : r.congested) {
    const auto& v = g.node(n);
    os << "  node " << n << ' ' << to_string(v.kind) << " x=" << v.x << " y=" << v.y << " track=" << v.track
       << " occupancy=" << r.occupancy[static_cast<std::size_t>(n)] << '\n';
  }
  return os.str();
}

inline RouteJob route_one(const PlacedNetlist& nl, const ArchSpec& tmpl, RouterChoice choice, const RouteArgs& args) {
  RouteJob job;
  ArchSpec arch = arch_for(nl, tmpl);
  Routing routing;
  if (args.min_width) {
    try {
      auto mw = min_channel_width(nl, arch, choice, args.params, args.width_cap);
      arch.channel_width = mw.channel_width;
      routing = std::move(mw.routing);
    } catch (const RoutingFailure& e) {
      job.failed = true;
      job.failure = nl.name + " (" + std::string(to_string(choice)) + "): " + e.what() + '\n';
      return job;
    }
  } else {
    if (choice == RouterChoice::DualBreadthFirst) check_dual_preconditions(arch);
    const RrGraph g(arch);
    routing = route_with(choice, resolve(nl, g), g, args.params);
    if (!routing.success) {
      job.failed = true;
      job.failure = nl.name + " (" + std::string(to_string(choice)) + ") at W=" +
                    std::to_string(arch.channel_width) + ": " + routing.message + '\n' +
                    congestion_report(routing, g);
      return job;
    }
  }
  const RrGraph g(arch);
  const auto m = mismatch_report(routing, g, resolve(nl, g));
  job.channel_width = arch.channel_width;
  job.dump = to_text(RoutingDump{arch, nl, std::string(to_string(choice)), routing.trees});
  job.metrics_row = nl.name + ',' + std::string(to_string(choice)) + ',' + std::to_string(arch.channel_width) +
                    ',' + std::to_string(m.hop_mismatch.size()) + ',' + fmt(m.mean_mismatch) + ',' +
                    std::to_string(m.max_mismatch) + ',' + std::to_string(routing.iterations) + '\n';
  return job;
}

} // namespace detail

inline void cmd_route(const RouteArgs& args) {
  OutputDir out(args.common, "route");
  out.input("arch", args.arch);
  if (args.netlists.empty()) throw ValidationError("route needs at least one netlist");
  if (args.routers.empty()) throw ValidationError("route needs a router");
  const ArchSpec tmpl = load_arch_with(args.arch, args.common.overrides);
  std::vector<PlacedNetlist> nls;
  std::set<std::string> names;
  for (std::size_t i = 0; i < args.netlists.size(); ++i) {
    out.input("netlist" + std::to_string(i), args.netlists[i]);
    nls.push_back(load_netlist(args.netlists[i]));
    if (!names.insert(nls.back().name).second)
      throw ValidationError("two netlists are named '" + nls.back().name + "'");
  }
  std::vector<RouterChoice> choices;
  for (const auto& r : args.routers) choices.push_back(parse_router_choice(r));
  out.param("routers", [&] {
    std::string s;
    for (const auto& r : args.routers) s += (s.empty() ? "" : ",") + r;
    return s;
  }());
  out.param("min_width", args.min_width ? "1" : "0");
  out.param("max_iterations", std::to_string(args.params.max_iterations));

  const std::size_t nr = choices.size();
  std::vector<detail::RouteJob> jobs(nls.size() * nr);
  parallel_for(jobs.size(), args.common.jobs,
               [&](std::size_t i) { jobs[i] = detail::route_one(nls[i / nr], tmpl, choices[i % nr], args); });

  std::string metrics = out.seed_line() + "netlist,router,channel_width,pairs,mean_mismatch,max_mismatch,iterations\n";
  std::string failures;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    if (j.failed) {
      failures += j.failure;
      continue;
    }
    out.write(nls[i / nr].name + "." + std::string(to_string(choices[i % nr])) + ".route", out.seed_line() + j.dump);
    metrics += j.metrics_row;
  }
  out.write("metrics.csv", metrics);
  if (nr > 1) {
    std::string cmp = out.seed_line() + "netlist";
    for (auto c : choices) cmp += ",w_" + std::string(to_string(c));
    cmp += '\n';
    for (std::size_t n = 0; n < nls.size(); ++n) {
      cmp += nls[n].name;
      for (std::size_t r = 0; r < nr; ++r) {
        const auto& j = jobs[n * nr + r];
        cmp += ',' + (j.failed ? std::string("fail") : std::to_string(j.channel_width));
      }
      cmp += '\n';
    }
    out.write("width_comparison.csv", cmp);
  }
  if (!failures.empty()) {
    out.write("congestion_report.txt", out.seed_line() + failures);
    out.finish();
    throw RoutingFailure("routing failed; see " + (out.dir() / "congestion_report.txt").string() + "\n" + failures);
  }
  out.finish();
}

// analyze

struct AnalyzeArgs {
  std::vector<std::string> dumps;
  std::string library; // empty: built-in library
  std::string plot;    // "" or "svg"
  std::string edge = "rise";
  long max_lag = -1;
  std::vector<int> sweep{0, 1, 3, 5, 7};
  int sweep_base_segments = 4;
  Common common;
};

namespace detail {

struct PairAnalysis {
  std::string row;
  std::string svg;
  std::string rail1;
};

inline Edge parse_edge(const std::string& s) {
  if (s == "rise") return Edge::Rising;
  if (s == "fall") return Edge::Falling;
  throw ValidationError("edge must be rise or fall, got '" + s + "'");
}

inline std::string file_safe(std::string s) {
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.') ch = '_';
  return s;
}

} // namespace detail

inline void cmd_analyze(const AnalyzeArgs& args) {
  OutputDir out(args.common, "analyze");
  if (args.dumps.empty()) throw ValidationError("analyze needs at least one routing dump");
  if (!args.plot.empty() && args.plot != "svg") throw ValidationError("plot format must be svg");
  const Edge edge = detail::parse_edge(args.edge);
  StepLibrary lib = default_step_library();
  if (!args.library.empty()) {
    out.input("library", args.library);
    lib = load_step_library(args.library);
  }
  out.param("edge", args.edge);
  out.param("max_lag", std::to_string(args.max_lag));
  if (!args.plot.empty()) out.param("plot", args.plot);

  std::string csv = out.seed_line() +
                    "routing,netlist,rail1,rail0,hop_mismatch,elmore_rail1,elmore_rail0,energy_rail1,energy_rail0,balance,xcorr\n";
  ArchSpec sweep_arch;
  for (std::size_t d = 0; d < args.dumps.size(); ++d) {
    out.input("routing" + std::to_string(d), args.dumps[d]);
    const auto dump = load_routing_dump(args.dumps[d]);
    if (d == 0) sweep_arch = dump.arch;
    const RrGraph g(dump.arch);
    const auto res = resolve(dump.netlist, g);
    const std::string stem = fs::path(args.dumps[d]).stem().string();
    Routing routed;
    routed.trees = dump.trees;
    if (dump.trees.size() != dump.netlist.nets.size())
      throw ValidationError("routing dump '" + args.dumps[d] + "' does not route every net");
    std::vector<detail::PairAnalysis> pairs(res.pairs.size());
    parallel_for(pairs.size(), args.common.jobs, [&](std::size_t i) {
      const auto& p = res.pairs[i];
      const auto& t1 = dump.trees[p.rail1];
      const auto& t0 = dump.trees[p.rail0];
      const auto e1 = route_elements(t1, g), e0 = route_elements(t0, g);
      double last = 0;
      for (const auto* es : {&e1, &e0})
        for (const auto& e : *es) last = std::max(last, e.arrival);
      const TraceOptions opt{lib.min_tau0() / 50.0, last + 10.0 * lib.max_tau0()};
      const auto w1 = synthesize_trace(e1, lib, edge, opt), w0 = synthesize_trace(e0, lib, edge, opt);
      auto max_arrival = [&](const RouteTree& t) {
        const auto rc = route_rc(t, g);
        return *std::max_element(rc.arrival.begin(), rc.arrival.end());
      };
      const auto& n1 = dump.netlist.nets[p.rail1].id;
      const auto& n0 = dump.netlist.nets[p.rail0].id;
      auto& a = pairs[i];
      a.rail1 = n1;
      a.row = stem + ',' + dump.netlist.name + ',' + n1 + ',' + n0 + ',' +
              std::to_string(hop_mismatch(routed, g, p.rail1, p.rail0)) +
              ',' + fmt(max_arrival(t1)) + ',' + fmt(max_arrival(t0)) + ',' + fmt(w1.energy()) + ',' +
              fmt(w0.energy()) + ',' + fmt(balance(w0, w1)) + ',' +
              fmt(xcorr_indiscernability(w0, w1, args.max_lag)) + '\n';
      if (!args.plot.empty()) a.svg = traces_svg({{n1, w1}, {n0, w0}});
    });
    for (const auto& a : pairs) {
      csv += a.row;
      if (!a.svg.empty())
        out.write(detail::file_safe(stem + "." + a.rail1) + ".svg", a.svg);
    }
  }
  out.write("analysis.csv", csv);

  const auto seq = mismatch_balance_sweep(args.sweep, args.sweep_base_segments, sweep_arch, lib, edge);
  std::string sw = out.seed_line() + "hop_mismatch,balance\n";
  for (std::size_t i = 0; i < seq.size(); ++i) sw += std::to_string(args.sweep[i]) + ',' + fmt(seq[i]) + '\n';
  out.write("balance_sweep.csv", sw);
  out.finish();
}

// bitstream

struct BitstreamArgs {
  std::string dump;
  std::string arch;  // optional cross-check
  std::string gates; // gate library for PLBs that name a gate
  Common common;
};

/// Configuration image of a routed design: every switch on a route tree is on,
/// and PLBs naming a gate hold its LUT pair in LUT0 and LUT1.
inline Bitstream build_bitstream(const RoutingDump& dump, const std::vector<LibraryGate>& gates) {
  const RrGraph g(dump.arch);
  std::vector<bool> bits(g.total_config_bits(), false);
  for (const auto& t : dump.trees)
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      if (t.parent[k] == no_node) continue;
      auto sw = g.find_switch(t.parent[k], t.nodes[k]);
      if (!sw) throw ValidationError("route uses a connection the fabric does not have");
      const int bit = g.switches()[static_cast<std::size_t>(*sw)].config_bit;
      if (bit >= 0) bits[static_cast<std::size_t>(bit)] = true;
    }
  std::map<std::pair<int, int>, std::size_t> plb_bit; // (block, local) -> position
  const auto& cfg = g.config_bits();
  for (std::size_t i = 0; i < cfg.size(); ++i)
    if (cfg[i].kind == ConfigBitKind::PlbInternal) plb_bit[{cfg[i].block, cfg[i].local}] = i;
  for (const auto& b : dump.netlist.blocks) {
    if (b.gate.empty() || b.kind != BlockKind::PLB) continue;
    auto it = std::find_if(gates.begin(), gates.end(), [&](const LibraryGate& lg) { return lg.name == b.gate; });
    if (it == gates.end()) throw ValidationError("gate '" + b.gate + "' of block " + b.id + " is not in the library");
    const auto luts = synthesize_lut_pair(it->function);
    const int block = g.plb_index(b.x, b.y);
    for (int i = 0; i < 64; ++i) {
      bits[plb_bit.at({block, i})] = (luts.table_o0 >> i) & 1u;
      bits[plb_bit.at({block, 64 + i})] = (luts.table_o1 >> i) & 1u;
    }
  }
  return {arch_hash_hex(dump.arch), std::move(bits)};
}

inline void cmd_bitstream(const BitstreamArgs& args) {
  OutputDir out(args.common, "bitstream");
  out.input("routing", args.dump);
  const auto dump = load_routing_dump(args.dump);
  if (!args.arch.empty()) {
    out.input("arch", args.arch);
    const auto a = load_arch_with(args.arch, args.common.overrides);
    if (arch_hash(a) != arch_hash(dump.arch))
      throw RefusalError("architecture " + arch_hash_hex(a) + " does not match the routed fabric " +
                         arch_hash_hex(dump.arch));
  }
  std::vector<LibraryGate> gates;
  if (!args.gates.empty()) {
    out.input("gates", args.gates);
    gates = load_gate_library(args.gates);
  }
  out.write("bitstream.txt", out.seed_line() + to_text(build_bitstream(dump, gates)));
  out.finish();
}

// simulate-config

struct SimulateArgs {
  std::string arch;
  std::string bitstream;
  bool bug = false;
  TimePs period_ps = 0;
  TimePs threshold_ps = -1;
  ChainTiming timing;
  std::string log = "boundary"; // none, boundary, full
  Common common;
};

inline ChainLog parse_chain_log(const std::string& s) {
  if (s == "none") return ChainLog::None;
  if (s == "boundary") return ChainLog::Boundary;
  if (s == "full") return ChainLog::Full;
  throw ValidationError("log level must be none, boundary or full, got '" + s + "'");
}

inline void cmd_simulate_config(const SimulateArgs& args) {
  OutputDir out(args.common, "simulate-config");
  out.input("arch", args.arch);
  out.input("bitstream", args.bitstream);
  const auto a = load_arch_with(args.arch, args.common.overrides);
  const auto bs = load_bitstream_file(args.bitstream);
  if (bs.arch_hash != arch_hash_hex(a))
    throw RefusalError("bitstream was built for architecture " + bs.arch_hash + ", not " + arch_hash_hex(a));
  const auto level = parse_chain_log(args.log);

  ChainTiming t = args.timing;
  t.symbol_period_ps = args.period_ps;
  TgBugModel bug{args.bug, args.threshold_ps};
  out.param("bug", args.bug ? "1" : "0");
  out.param("period_ps", std::to_string(args.period_ps));
  out.param("threshold_ps", std::to_string(bug.threshold(t)));
  out.param("forward_ps", std::to_string(t.forward_ps));
  out.param("precharge_ps", std::to_string(t.precharge_ps));

  const RrGraph g(a);
  auto chain = make_chain(g);
  const TimePs hold = static_cast<TimePs>(chain.size() + 1) * t.forward_ps;
  chain = initialize_chain(std::move(chain), hold, t);
  const auto r = load_with_bug(chain, bs.bits, t, bug, level);

  std::size_t wrong = 0;
  for (std::size_t i = 0; i < bs.bits.size(); ++i)
    wrong += r.image[i] != (bs.bits[i] ? DualRailValue::One : DualRailValue::Zero);
  std::size_t overwrites = 0;
  for (const auto& c : r.corruption) overwrites += c.kind == CorruptionKind::Overwrite;

  std::ostringstream os;
  os << out.seed_line();
  os << "arch_hash=" << bs.arch_hash << '\n';
  os << "chain_stages=" << chain.size() << '\n';
  os << "bits=" << bs.bits.size() << '\n';
  os << "init_hold_ps=" << hold << '\n';
  os << "ack_count=" << r.ack_count << '\n';
  os << "elapsed_ps=" << r.elapsed_ps << '\n';
  os << "throughput_ghz=" << fmt(r.rate_ghz()) << '\n';
  os << "bug=" << (args.bug ? "on" : "off") << " threshold_ps=" << bug.threshold(t) << " period_ps=" << t.symbol_period_ps
     << " active=" << bug.active(t) << '\n';
  os << "corruption_events=" << r.corruption.size() << " overwrites=" << overwrites << '\n';
  os << "mismatched_bits=" << wrong << '\n';
  os << "image_exact=" << (wrong == 0 ? 1 : 0) << '\n';
  if (chain.size() == 4691)
    os << "note=acknowledgments are counted once per configuration bit; a count of 4692 on this fabric would "
          "be one above the 4691-bit total\n";
  out.write("config_report.txt", os.str());

  std::string log = out.seed_line() + event_log_csv(r.log);
  std::string corr = out.seed_line() + "time_ps,stage,neighbor,kind\n";
  for (const auto& c : r.corruption)
    corr += std::to_string(c.time) + ',' + std::to_string(c.stage) + ',' + std::to_string(c.neighbor) + ',' +
            (c.kind == CorruptionKind::Overwrite ? "overwrite" : "transient") + '\n';
  if (level != ChainLog::None) out.write("event_log.csv", log);
  out.write("corruption.csv", corr);
  out.finish();
}

// gen-suite

struct GenSuiteArgs {
  int count = 50;
  SuiteParams suite;
  Common common;
};

inline void cmd_gen_suite(const GenSuiteArgs& args) {
  if (args.count < 1) throw ValidationError("suite count must be >= 1");
  OutputDir out(args.common, "gen-suite");
  out.param("count", std::to_string(args.count));
  out.param("min_grid", std::to_string(args.suite.min_grid));
  out.param("max_grid", std::to_string(args.suite.max_grid));
  const auto suite = generate_suite(args.count, args.common.seed, args.suite);
  for (const auto& nl : suite) out.write(nl.name + ".net", out.seed_line() + to_text(nl));
  out.finish();
}

/// Runs a command and maps failures to exit codes, writing the diagnostic to `err`.
inline int run(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return exit_ok;
  } catch (const RefusalError& e) {
    err << "refused: " << e.what() << '\n';
    return exit_refused;
  } catch (const RoutingFailure& e) {
    err << "routing failure: " << e.what() << '\n';
    return exit_routing;
  } catch (const DeadlockError& e) {
    err << "deadlock: " << e.what() << '\n';
    return exit_deadlock;
  } catch (const IncompleteResetError& e) {
    err << "reset: " << e.what() << '\n';
    return exit_protocol;
  } catch (const ProtocolError& e) {
    err << "protocol: " << e.what() << '\n';
    return exit_protocol;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return exit_validation;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_validation;
  } catch (const ConfigurationError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return exit_validation;
  } catch (const PreconditionError& e) {
    err << "precondition: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

} // namespace secfpga::cli
