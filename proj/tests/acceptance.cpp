#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "secfpga/cli.hpp"

using namespace secfpga;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s > budget_s) o.require(false, "runtime " + std::to_string(s) + " s over budget " + std::to_string(budget_s) + " s");
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << std::fixed << std::setprecision(2) << s << " s)";
  if (!o.detail.empty()) std::cout << " " << o.detail;
  std::cout << std::endl;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Config-bit accounting

Outcome config_bits() {
  Outcome o;
  const auto c = count_config_bits(ArchSpec{});
  const long expected[] = {2583, 1368, 288, 36, 192, 192, 32};
  o.require(c.rows.size() == 7, "expected 7 rows");
  for (std::size_t i = 0; i < std::min<std::size_t>(7, c.rows.size()); ++i)
    o.require(c.rows[i].total == expected[i], c.rows[i].submodule + "=" + std::to_string(c.rows[i].total));
  o.require(c.total == 4691, "total=" + std::to_string(c.total));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("total=") + std::to_string(c.total);
  return o;
}

// Switchbox structure

using Pair = std::pair<Terminal, Terminal>;

Pair norm(Terminal a, Terminal b) { return b < a ? Pair{b, a} : Pair{a, b}; }

std::set<Pair> pairs_of(const SwitchSet& s) {
  std::set<Pair> out;
  for (const auto& p : s.pairs) out.insert(norm(p.a, p.b));
  return out;
}

// Set S written out term by term.
std::set<Pair> set_s(int W) {
  std::set<Pair> s;
  for (int i = 0; i < W; ++i) {
    const int r = W - i - 1;
    s.insert(norm({0, i}, {2, i}));
    s.insert(norm({1, i}, {3, i}));
    s.insert(norm({0, i}, {1, i}));
    s.insert(norm({2, i}, {3, i}));
    s.insert(norm({1, i}, {2, r}));
    s.insert(norm({3, i}, {0, r}));
  }
  return s;
}

Outcome switchbox_structure() {
  Outcome o;
  for (int W : {1, 2, 4, 8, 16}) {
    const std::string w = "W=" + std::to_string(W) + " ";
    for (auto kind : {SwitchboxKind::Subset, SwitchboxKind::TwistOnTurn, SwitchboxKind::TwistAlways}) {
      const auto s = build_switchbox(kind, W);
      const std::string k = w + std::string(to_string(kind)) + " ";
      o.require(s.size() == static_cast<std::size_t>(6 * W), k + "size " + std::to_string(s.size()));
      o.require(pairs_of(s).size() == s.size(), k + "duplicate switches");
      std::map<Terminal, int> degree;
      for (const auto& p : s.pairs) {
        ++degree[p.a];
        ++degree[p.b];
      }
      o.require(degree.size() == static_cast<std::size_t>(4 * W), k + "terminal count");
      for (auto [t, d] : degree) o.require(d == 3, k + "degree " + std::to_string(d));
    }
    const auto always = pairs_of(build_switchbox(SwitchboxKind::TwistAlways, W));
    for (int i = 0; i < W; ++i) {
      o.require(always.count(norm({0, i}, {2, W - 1 - i})) == 1, w + "twist-always left-right " + std::to_string(i));
      o.require(always.count(norm({1, i}, {3, W - 1 - i})) == 1, w + "twist-always top-bottom " + std::to_string(i));
    }
    o.require(pairs_of(build_switchbox(SwitchboxKind::TwistOnTurn, W)) == set_s(W), w + "twist-on-turn differs from S");
  }
  return o;
}

// Dual-rail routing suite

Outcome dual_rail_suite() {
  Outcome o;
  const auto suite = generate_suite(50);
  struct Row {
    int w_bf = 0, w_dual = 0;
    double bf_mean = 0;
    std::size_t pairs = 0, dual_zero = 0;
    std::string error;
  };
  std::vector<Row> rows(suite.size());
  cli::parallel_for(suite.size(), jobs(), [&](std::size_t i) {
    auto& r = rows[i];
    try {
      const auto bf = min_channel_width(suite[i], ArchSpec{}, RouterChoice::BreadthFirst);
      const auto dual = min_channel_width(suite[i], ArchSpec{}, RouterChoice::DualBreadthFirst);
      r.w_bf = bf.channel_width;
      r.w_dual = dual.channel_width;
      ArchSpec a = arch_for(suite[i], ArchSpec{});
      a.channel_width = bf.channel_width;
      RrGraph gb(a);
      r.bf_mean = mismatch_report(bf.routing, gb, resolve(suite[i], gb)).mean_mismatch;
      a.channel_width = dual.channel_width;
      RrGraph gd(a);
      const auto m = mismatch_report(dual.routing, gd, resolve(suite[i], gd));
      r.pairs = m.hop_mismatch.size();
      r.dual_zero = static_cast<std::size_t>(std::count(m.hop_mismatch.begin(), m.hop_mismatch.end(), 0));
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  std::size_t pairs = 0, zero = 0, bf_positive = 0, width_ok = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!r.error.empty()) {
      o.require(false, suite[i].name + ": " + r.error);
      continue;
    }
    pairs += r.pairs;
    zero += r.dual_zero;
    bf_positive += r.bf_mean > 0;
    if (r.w_dual <= r.w_bf + 2) ++width_ok;
    else o.require(false, suite[i].name + " W_dual=" + std::to_string(r.w_dual) + " W_bf=" + std::to_string(r.w_bf));
  }
  o.require(zero == pairs, "dual zero-mismatch pairs " + std::to_string(zero) + "/" + std::to_string(pairs));
  o.require(bf_positive * 5 >= suite.size() * 4, "bf mismatch > 0 on only " + std::to_string(bf_positive));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("dual zero ") + std::to_string(zero) + "/" +
              std::to_string(pairs) + " pairs, bf mismatch>0 on " + std::to_string(bf_positive) +
              "/50, W_dual<=W_bf+2 on " + std::to_string(width_ok) + "/50";
  return o;
}

// Elmore oracle

double shared_path_oracle(const RcTree& t, std::size_t i) {
  auto edges_to = [&](std::size_t k) {
    std::set<std::size_t> e;
    for (int v = static_cast<int>(k); t.parent(static_cast<std::size_t>(v)) >= 0;
         v = t.parent(static_cast<std::size_t>(v)))
      e.insert(static_cast<std::size_t>(v));
    return e;
  };
  const auto ei = edges_to(i);
  double tau = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    double rik = 0;
    for (auto e : edges_to(k))
      if (ei.count(e)) rik += t.r(e);
    tau += t.c(k) * rik;
  }
  return tau;
}

Outcome elmore_oracle() {
  Outcome o;
  std::mt19937_64 rng(500);
  std::uniform_real_distribution<double> u(0.001, 100.0);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 100);
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<double> r(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 1; k < n; ++k)
      parent[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = order[rng() % static_cast<std::uint64_t>(k)];
    for (int k = 0; k < n; ++k) {
      r[static_cast<std::size_t>(k)] = u(rng);
      c[static_cast<std::size_t>(k)] = u(rng);
    }
    const RcTree t(parent, r, c);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double got = elmore_delay(t, i), want = shared_path_oracle(t, i);
      const double rel = want == 0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
      worst = std::max(worst, rel);
    }
  }
  o.require(worst <= 1e-9, "relative error " + std::to_string(worst));
  std::ostringstream os;
  os << "max relative error " << std::scientific << worst;
  o.detail += (o.detail.empty() ? "" : "; ") + os.str();
  return o;
}

// Balance model

Outcome balance_model() {
  Outcome o;
  const auto lib = default_step_library();
  SuiteParams sp;
  sp.max_grid = 5;
  std::size_t pairs = 0;
  double worst_b = 0, worst_x = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto nl = generate_wddl_netlist(seed, sp);
    const auto mw = min_channel_width(nl, ArchSpec{}, RouterChoice::DualBreadthFirst);
    ArchSpec a = arch_for(nl, ArchSpec{});
    a.channel_width = mw.channel_width;
    const RrGraph g(a);
    const auto res = resolve(nl, g);
    for (const auto& p : res.pairs) {
      const auto w1 = net_trace(mw.routing.trees[p.rail1], g, lib, Edge::Rising);
      const auto w0 = net_trace(mw.routing.trees[p.rail0], g, lib, Edge::Rising);
      worst_b = std::max(worst_b, std::abs(balance(w0, w1) - 1.0));
      worst_x = std::max(worst_x, std::abs(xcorr_indiscernability(w0, w1) - 1.0));
      ++pairs;
    }
  }
  o.require(pairs > 0, "no pairs");
  o.require(worst_b <= 1e-12, "balance deviation " + std::to_string(worst_b));
  o.require(worst_x <= 1e-12, "xcorr deviation " + std::to_string(worst_x));
  const auto seq = mismatch_balance_sweep({0, 1, 3, 5, 7}, 4, ArchSpec{}, lib);
  o.require(std::abs(seq[0] - 1.0) <= 1e-12, "sweep starts at " + std::to_string(seq[0]));
  for (std::size_t i = 1; i < seq.size(); ++i) o.require(seq[i] > seq[i - 1], "sweep not increasing at " + std::to_string(i));
  std::ostringstream os;
  os << pairs << " mirrored pairs; sweep";
  for (double v : seq) os << ' ' << std::setprecision(4) << v;
  o.detail += (o.detail.empty() ? "" : "; ") + os.str();
  return o;
}

// LUT mapping equivalence

struct GateInterpreter {
  GateFunction f;
  bool o1 = false, o0 = false;

  PlbOutput step(const PlbStimulus& s) {
    const bool xv = s.x == DualRailValue::Zero || s.x == DualRailValue::One;
    const bool yv = s.y == DualRailValue::Zero || s.y == DualRailValue::One;
    if (xv && yv && !s.ackin) {
      const auto idx = static_cast<std::size_t>(((s.x == DualRailValue::One) << 1) | (s.y == DualRailValue::One));
      o1 = f.f1[idx];
      o0 = f.f0[idx];
    } else if (s.x == DualRailValue::Null && s.y == DualRailValue::Null && s.ackin) {
      o1 = o0 = false;
    }
    return {make_dual_rail(o0, o1), o1 != o0};
  }
};

Outcome lut_equivalence() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::size_t gates = 0, steps = 0;
  for (unsigned bits = 0; bits < 16; ++bits) {
    const auto f = GateFunction::from_f1_bits(bits);
    if (!f.complete()) continue;
    ++gates;
    const auto luts = synthesize_lut_pair(f);
    for (int seq = 0; seq < 1000; ++seq) {
      GateInterpreter ref{f};
      PlbSimulator sim(luts);
      auto x = DualRailValue::Null, y = DualRailValue::Null;
      auto next = [&](DualRailValue v) {
        if (rng() % 2) return v;
        if (v != DualRailValue::Null) return DualRailValue::Null;
        return rng() % 2 ? DualRailValue::One : DualRailValue::Zero;
      };
      for (int k = 0; k < 16; ++k) {
        x = next(x);
        y = next(y);
        const PlbStimulus s{x, y, static_cast<bool>(rng() % 2)};
        const auto got = sim.step(s);
        const auto want = ref.step(s);
        ++steps;
        if (!(got == want)) {
          o.require(false, "gate " + std::to_string(bits) + " diverges");
          return o;
        }
        const bool r1 = got.out == DualRailValue::One, r0 = got.out == DualRailValue::Zero;
        if (got.out == DualRailValue::Invalid) {
          o.require(false, "forbidden (1,1) state reached");
          return o;
        }
        if (got.s_out != (r1 != r0) || got.s_out != (r1 || r0)) {
          o.require(false, "s_out differs from O1 xor O0 / O1 or O0");
          return o;
        }
      }
    }
  }
  o.require(gates == 16, "complete gates " + std::to_string(gates));
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(gates) + " gates, " + std::to_string(steps) + " steps";
  return o;
}

// Configuration chain

Outcome config_chain() {
  Outcome o;
  const RrGraph g(ArchSpec{});
  const auto chain = initialize_chain(make_chain(g), static_cast<TimePs>(g.total_config_bits() + 1) * 184);
  const std::size_t n = chain.size();
  std::mt19937_64 rng(4691);
  std::vector<bool> random(n);
  for (std::size_t i = 0; i < n; ++i) random[i] = rng() & 1u;
  const std::vector<bool> zeros(n, false);

  const auto clean = load_bitstream(chain, random);
  o.require(clean.ack_count == n, "ack_count " + std::to_string(clean.ack_count));
  o.require(clean.exact(random), "memory image differs");

  TgBugModel bug;
  bug.enabled = true;
  ChainTiming fast, slow;
  slow.symbol_period_ps = bug.threshold(slow);
  for (const auto* t : {&fast, &slow}) {
    const auto z = load_with_bug(chain, zeros, *t, bug);
    o.require(z.corruption.empty() && z.exact(zeros), "zeros corrupted at period " + std::to_string(t->symbol_period_ps));
  }
  const auto below = load_with_bug(chain, random, fast, bug);
  o.require(!below.corruption.empty(), "no corruption below threshold");
  const auto at = load_with_bug(chain, random, slow, bug);
  o.require(at.corruption.empty() && at.exact(random), "corruption at threshold");

  const auto r64 = load_bitstream(make_chain(64), std::vector<bool>(random.begin(), random.begin() + 64));
  o.require(r64.elapsed_ps == 40000, "64-bit elapsed " + std::to_string(r64.elapsed_ps) + " ps");
  o.require(std::abs(r64.rate_ghz() - 1.6) < 1e-12, "rate " + std::to_string(r64.rate_ghz()));

  std::ostringstream os;
  os << "acks " << clean.ack_count << " for " << n << " bits (a reference count of 4692 is one above the bit total); "
     << below.corruption.size() << " corruption events below threshold; 64 bits in " << r64.elapsed_ps << " ps = "
     << r64.rate_ghz() << " GHz";
  o.detail += (o.detail.empty() ? "" : "; ") + os.str();
  return o;
}

// CLI determinism

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[e.path().filename().string()] = os.str();
  }
  return files;
}

Outcome cli_determinism() {
  Outcome o;
  const std::string data = SECFPGA_DATA_DIR;
  const auto root = fs::temp_directory_path() / "secfpga_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  auto common = [&](const std::string& sub) {
    cli::Common c;
    c.out_dir = (root / sub).string();
    c.seed = 3;
    c.jobs = jobs();
    return c;
  };
  auto twice = [&](const std::string& name, const std::string& sub, const std::function<void()>& fn) {
    std::map<std::string, std::string> runs[2];
    for (auto& r : runs) {
      fs::remove_all(root / sub);
      std::ostringstream err;
      const int code = cli::run(fn, err);
      o.require(code == cli::exit_ok, name + " exit " + std::to_string(code) + " " + err.str());
      r = snapshot(root / sub);
    }
    o.require(!runs[0].empty() && runs[0] == runs[1], name + " outputs differ between runs");
    return runs[0];
  };

  cli::GenSuiteArgs gs{3, {}, common("suite")};
  gs.suite.max_grid = 3;
  const auto suite = twice("gen-suite", "suite", [&] { cli::cmd_gen_suite(gs); });

  cli::ArchReportArgs ar{data + "/prototype.arch", common("arch")};
  twice("arch-report", "arch", [&] { cli::cmd_arch_report(ar); });

  cli::RouteArgs rt;
  rt.arch = data + "/prototype.arch";
  rt.netlists = {data + "/sample.net"};
  rt.routers = {"bf", "dual-bf"};
  rt.common = common("route");
  twice("route", "route", [&] { cli::cmd_route(rt); });

  cli::RouteArgs rs = rt;
  rs.netlists.clear();
  for (const auto& [name, body] : suite)
    if (name != "manifest.txt") rs.netlists.push_back((root / "suite" / name).string());
  rs.min_width = true;
  rs.common = common("route_suite");
  twice("route --min-width", "route_suite", [&] { cli::cmd_route(rs); });

  cli::AnalyzeArgs an;
  an.dumps = {(root / "route" / "sample.bf.route").string(), (root / "route" / "sample.dual-bf.route").string()};
  an.library = data + "/step_library.txt";
  an.plot = "svg";
  an.common = common("analyze");
  twice("analyze", "analyze", [&] { cli::cmd_analyze(an); });

  cli::BitstreamArgs bs{(root / "route" / "sample.dual-bf.route").string(), data + "/prototype.arch",
                        data + "/gates.txt", common("bitstream")};
  twice("bitstream", "bitstream", [&] { cli::cmd_bitstream(bs); });

  cli::SimulateArgs sim;
  sim.arch = data + "/prototype.arch";
  sim.bitstream = (root / "bitstream" / "bitstream.txt").string();
  sim.bug = true;
  sim.common = common("simulate");
  twice("simulate-config", "simulate", [&] { cli::cmd_simulate_config(sim); });

  fs::remove_all(root);
  return o;
}

} // namespace

int main() {
  criterion("config-bit accounting", 1, config_bits);
  criterion("switchbox structure", 1, switchbox_structure);
  criterion("dual-rail routing suite", 120, dual_rail_suite);
  criterion("elmore oracle", 30, elmore_oracle);
  criterion("balance model", 30, balance_model);
  criterion("lut mapping equivalence", 60, lut_equivalence);
  criterion("configuration chain", 60, config_chain);
  criterion("cli determinism", 600, cli_determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
