#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "secfpga/error.hpp"
#include "secfpga/router.hpp"
#include "secfpga/rr_graph.hpp"
#include "secfpga/switchbox.hpp"
#include "secfpga/text.hpp"

namespace secfpga {

/// RC tree given by parent links; `parent[k]` is -1 for the source and `r[k]`
/// is the resistance of the edge into k (ignored for the source).
class RcTree {
public:
  RcTree() = default;
  RcTree(std::vector<int> parent, std::vector<double> r, std::vector<double> c)
      : parent_(std::move(parent)), r_(std::move(r)), c_(std::move(c)) {
    const std::size_t n = parent_.size();
    if (r_.size() != n || c_.size() != n) throw ValidationError("RC tree arrays differ in length");
    int roots = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (parent_[k] < 0) {
        ++roots;
        source_ = static_cast<int>(k);
      } else if (parent_[k] >= static_cast<int>(n)) {
        throw ValidationError("RC tree parent out of range");
      } else if (!(r_[k] > 0)) {
        throw ValidationError("RC tree resistance must be positive");
      }
      if (!(c_[k] > 0)) throw ValidationError("RC tree capacitance must be positive");
    }
    if (n > 0 && roots != 1) throw ValidationError("RC tree needs exactly one source");
    // Every node must reach the source: walk each chain with a step bound.
    for (std::size_t k = 0; k < n; ++k) {
      int v = static_cast<int>(k);
      std::size_t steps = 0;
      while (parent_[static_cast<std::size_t>(v)] >= 0) {
        v = parent_[static_cast<std::size_t>(v)];
        if (++steps > n) throw ValidationError("RC tree node " + std::to_string(k) + " is not connected to the source");
      }
    }
  }

  std::size_t size() const { return parent_.size(); }
  int source() const { return source_; }
  int parent(std::size_t k) const { return parent_[k]; }
  double r(std::size_t k) const { return r_[k]; }
  double c(std::size_t k) const { return c_[k]; }

  /// Nodes ordered so that every parent precedes its children.
  std::vector<int> topological_order() const {
    std::vector<std::vector<int>> kids(size());
    for (std::size_t k = 0; k < size(); ++k)
      if (parent_[k] >= 0) kids[static_cast<std::size_t>(parent_[k])].push_back(static_cast<int>(k));
    std::vector<int> order;
    if (size() == 0) return order;
    order.push_back(source_);
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int k : kids[static_cast<std::size_t>(order[i])]) order.push_back(k);
    return order;
  }

private:
  std::vector<int> parent_;
  std::vector<double> r_;
  std::vector<double> c_;
  int source_ = -1;
};

/// Elmore delays of all nodes: tau_i = sum_k C_k R_ik with R_ik the resistance
/// shared by the source paths to i and k.
inline std::vector<double> elmore_delays(const RcTree& t) {
  const auto order = t.topological_order();
  std::vector<double> down(t.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto k = static_cast<std::size_t>(*it);
    down[k] += t.c(k);
    if (t.parent(k) >= 0) down[static_cast<std::size_t>(t.parent(k))] += down[k];
  }
  std::vector<double> tau(t.size(), 0.0);
  for (int v : order) {
    const auto k = static_cast<std::size_t>(v);
    if (t.parent(k) >= 0) tau[k] = tau[static_cast<std::size_t>(t.parent(k))] + t.r(k) * down[k];
  }
  return tau;
}

inline double elmore_delay(const RcTree& t, std::size_t node) {
  if (node >= t.size()) throw ValidationError("node " + std::to_string(node) + " is not in the RC tree");
  return elmore_delays(t)[node];
}

/// Critically damped current pulse I(t) = Q / tau0^2 * t * exp(-t / tau0); integrates to Q.
struct StepTemplate {
  double q = 1.0;
  double tau0 = 1.0;

  double at(double t) const { return t <= 0 ? 0.0 : q / (tau0 * tau0) * t * std::exp(-t / tau0); }
};

struct ResponsePair {
  StepTemplate rising;  // 0 -> 1
  StepTemplate falling; // 1 -> 0
};

enum class Edge { Rising, Falling };

/// Step responses per element kind (buffer, segment, switch, sink) plus gate
/// responses keyed by (from, to) input vectors.
struct StepLibrary {
  std::map<std::string, ResponsePair> elements;
  std::map<std::pair<std::string, std::string>, StepTemplate> gates;

  const StepTemplate& get(const std::string& kind, Edge e) const {
    auto it = elements.find(kind);
    if (it == elements.end()) throw ValidationError("step library has no entry for '" + kind + "'");
    return e == Edge::Rising ? it->second.rising : it->second.falling;
  }
  const StepTemplate& gate(const std::string& from, const std::string& to) const {
    auto it = gates.find({from, to});
    if (it == gates.end()) throw ValidationError("step library has no gate response " + from + "->" + to);
    return it->second;
  }
  double min_tau0() const {
    double m = 0;
    for (const auto& [k, p] : elements) {
      const double v = std::min(p.rising.tau0, p.falling.tau0);
      m = m == 0 ? v : std::min(m, v);
    }
    return m > 0 ? m : 1.0;
  }
  double max_tau0() const {
    double m = 0;
    for (const auto& [k, p] : elements) m = std::max({m, p.rising.tau0, p.falling.tau0});
    return m > 0 ? m : 1.0;
  }
};

inline StepLibrary default_step_library() {
  StepLibrary lib;
  lib.elements["buffer"] = {{2.0, 1.0}, {1.5, 1.0}};
  lib.elements["segment"] = {{1.0, 1.0}, {0.8, 1.0}};
  lib.elements["switch"] = {{0.2, 0.5}, {0.15, 0.5}};
  lib.elements["sink"] = {{0.5, 1.0}, {0.4, 1.0}};
  return lib;
}

/// Library file records: `<kind> <q_rise> <tau0_rise> <q_fall> <tau0_fall>` or
/// `gate <from> <to> <q> <tau0>`.
inline StepLibrary parse_step_library(std::istream& in, const std::string& name = "<library>") {
  StepLibrary lib;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(trim(strip_comment(line)));
    if (tok.empty()) continue;
    try {
      auto tmpl = [&](std::size_t i) {
        StepTemplate t{parse_double(tok[i]), parse_double(tok[i + 1])};
        if (!(t.tau0 > 0) || !(t.q > 0)) throw ValidationError("charge and time constant must be positive");
        return t;
      };
      if (tok[0] == "gate") {
        if (tok.size() != 5) throw ValidationError("expected: gate <from> <to> <q> <tau0>");
        lib.gates[{std::string(tok[1]), std::string(tok[2])}] = tmpl(3);
      } else {
        if (tok.size() != 5) throw ValidationError("expected: <kind> <q_rise> <tau0_rise> <q_fall> <tau0_fall>");
        lib.elements[std::string(tok[0])] = {tmpl(1), tmpl(3)};
      }
    } catch (const ValidationError& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  return lib;
}

inline StepLibrary load_step_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open step library '" + path + "'");
  return parse_step_library(in, path);
}

struct Trace {
  double dt = 1.0;
  std::vector<double> samples;

  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
  double energy() const {
    double e = 0;
    for (double v : samples) e += v * v;
    return e;
  }
};

inline std::string trace_csv(const Trace& t) {
  std::ostringstream os;
  os.precision(12);
  os << "time,current\n";
  for (std::size_t i = 0; i < t.samples.size(); ++i) os << t.time(i) << ',' << t.samples[i] << '\n';
  return os.str();
}

/// One contributor to a net's current: a library element firing at `arrival`.
struct TraceElement {
  std::string kind;
  double arrival = 0.0;
};

struct TraceOptions {
  double dt = 0;     // 0: smallest tau0 / 50
  double window = 0; // 0: last arrival + 10 * largest tau0
};

/// Delayed sum of step responses, sampled from t = 0.
inline Trace synthesize_trace(const std::vector<TraceElement>& elems, const StepLibrary& lib, Edge edge,
                              const TraceOptions& opt = {}) {
  Trace tr;
  tr.dt = opt.dt > 0 ? opt.dt : lib.min_tau0() / 50.0;
  double last = 0;
  for (const auto& e : elems) last = std::max(last, e.arrival);
  const double window = opt.window > 0 ? opt.window : last + 10.0 * lib.max_tau0();
  const auto n = static_cast<std::size_t>(std::ceil(window / tr.dt)) + 1;
  tr.samples.assign(n, 0.0);
  for (const auto& e : elems) {
    const auto& t = lib.get(e.kind, edge);
    for (std::size_t i = 0; i < n; ++i) tr.samples[i] += t.at(tr.time(i) - e.arrival);
  }
  return tr;
}

/// RC tree of a routed net: one RC node per route node, edges carrying switch
/// plus wire resistance, node capacitance including the driving switch.
struct RouteRc {
  RcTree tree;
  std::vector<NodeId> nodes; // route node of each RC node
  std::vector<double> arrival;
};

inline RouteRc route_rc(const RouteTree& route, const RrGraph& g) {
  if (route.empty()) throw ValidationError("route is empty");
  const auto& a = g.arch();
  RouteRc out;
  out.nodes = route.nodes;
  std::vector<int> parent(route.nodes.size(), -1);
  std::vector<double> r(route.nodes.size(), 0.0), c(route.nodes.size(), 0.0);
  for (std::size_t k = 0; k < route.nodes.size(); ++k) {
    const auto& n = g.node(route.nodes[k]);
    if (route.parent[k] == no_node) {
      c[k] = a.switch_c;
      continue;
    }
    auto it = std::find(route.nodes.begin(), route.nodes.end(), route.parent[k]);
    if (it == route.nodes.end()) throw ValidationError("route parent missing");
    parent[k] = static_cast<int>(it - route.nodes.begin());
    auto sw = g.find_switch(route.parent[k], route.nodes[k]);
    const double sr = sw ? g.switches()[static_cast<std::size_t>(*sw)].r : a.switch_r;
    const double sc = sw ? g.switches()[static_cast<std::size_t>(*sw)].c : a.switch_c;
    r[k] = sr + n.r;
    c[k] = sc + n.c;
  }
  out.tree = RcTree(std::move(parent), std::move(r), std::move(c));
  out.arrival = elmore_delays(out.tree);
  return out;
}

/// Elements of a routed net: the driving buffer at t = 0, every switch when its
/// input arrives, every segment and sink at its own Elmore arrival.
inline std::vector<TraceElement> route_elements(const RouteTree& route, const RrGraph& g) {
  const auto rc = route_rc(route, g);
  std::vector<TraceElement> el{{"buffer", 0.0}};
  for (std::size_t k = 0; k < route.nodes.size(); ++k) {
    const int p = rc.tree.parent(k);
    if (p < 0) continue;
    el.push_back({"switch", rc.arrival[static_cast<std::size_t>(p)]});
    const auto& n = g.node(route.nodes[k]);
    el.push_back({n.is_channel() ? "segment" : "sink", rc.arrival[k]});
  }
  return el;
}

inline Trace net_trace(const RouteTree& route, const RrGraph& g, const StepLibrary& lib, Edge edge,
                       const TraceOptions& opt = {}) {
  return synthesize_trace(route_elements(route, g), lib, edge, opt);
}

/// Elements of an unbranched route of n segments with unit-length wires
/// (buffer, n x (switch, segment), switch, sink).
inline std::vector<TraceElement> chain_elements(int segments, const ArchSpec& a) {
  std::vector<int> parent;
  std::vector<double> r, c;
  parent.push_back(-1);
  r.push_back(0);
  c.push_back(a.switch_c);
  for (int s = 0; s <= segments; ++s) {
    parent.push_back(static_cast<int>(parent.size()) - 1);
    const bool sink = s == segments;
    r.push_back(a.switch_r + (sink ? 0.0 : a.segment_r));
    c.push_back(a.switch_c + (sink ? 0.0 : a.segment_c));
  }
  RcTree t(parent, r, c);
  const auto tau = elmore_delays(t);
  std::vector<TraceElement> el{{"buffer", 0.0}};
  for (std::size_t k = 1; k < t.size(); ++k) {
    el.push_back({"switch", tau[k - 1]});
    el.push_back({k + 1 == t.size() ? "sink" : "segment", tau[k]});
  }
  return el;
}

/// RMS(w0) / RMS(w1) over a common window (the shorter trace is zero-padded).
inline double balance(const Trace& w0, const Trace& w1) {
  if (std::abs(w0.dt - w1.dt) > 1e-12 * std::max(w0.dt, w1.dt))
    throw ValidationError("traces have different sample periods");
  const double e1 = w1.energy();
  if (!(e1 > 0)) throw ValidationError("reference trace has zero energy");
  return std::sqrt(w0.energy() / e1);
}

/// Peak normalized cross-correlation over lags |lag| <= max_lag (negative: all lags).
inline double xcorr_indiscernability(const Trace& w0, const Trace& w1, long max_lag = -1) {
  if (std::abs(w0.dt - w1.dt) > 1e-12 * std::max(w0.dt, w1.dt))
    throw ValidationError("traces have different sample periods");
  const double e0 = w0.energy(), e1 = w1.energy();
  if (!(e0 > 0) || !(e1 > 0)) throw ValidationError("cross-correlation of a zero-energy trace");
  const auto n0 = static_cast<long>(w0.samples.size()), n1 = static_cast<long>(w1.samples.size());
  long lo = -(n1 - 1), hi = n0 - 1;
  if (max_lag >= 0) {
    lo = std::max(lo, -max_lag);
    hi = std::min(hi, max_lag);
  }
  const double norm = std::sqrt(e0) * std::sqrt(e1);
  double best = -2;
  // lag L aligns w0[i] with w1[i - L]
  for (long lag = lo; lag <= hi; ++lag) {
    double s = 0;
    const long i0 = std::max(0L, lag), i1 = std::min(n0, n1 + lag);
    for (long i = i0; i < i1; ++i)
      s += w0.samples[static_cast<std::size_t>(i)] * w1.samples[static_cast<std::size_t>(i - lag)];
    best = std::max(best, s / norm);
  }
  return std::clamp(best, -1.0, 1.0);
}

/// Balance of a rail pair whose rail0 carries `mismatch` more segments than rail1.
inline std::vector<double> mismatch_balance_sweep(const std::vector<int>& mismatches, int base_segments,
                                                  const ArchSpec& a, const StepLibrary& lib,
                                                  Edge edge = Edge::Rising) {
  int longest = base_segments;
  for (int m : mismatches) longest = std::max(longest, base_segments + m);
  // One window for every trace so the sequence is comparable.
  TraceOptions opt;
  opt.dt = lib.min_tau0() / 50.0;
  double last = 0;
  for (const auto& e : chain_elements(longest, a)) last = std::max(last, e.arrival);
  opt.window = last + 10.0 * lib.max_tau0();
  const auto w1 = synthesize_trace(chain_elements(base_segments, a), lib, edge, opt);
  std::vector<double> out;
  for (int m : mismatches) {
    if (m < 0) throw ValidationError("hop mismatch must be non-negative");
    out.push_back(balance(synthesize_trace(chain_elements(base_segments + m, a), lib, edge, opt), w1));
  }
  return out;
}

/// Zero-mean Gaussian noise added to every sample; the model itself is noiseless.
inline Trace add_noise(Trace t, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  for (auto& v : t.samples) v += d(rng);
  return t;
}

// ---------------------------------------------------------------------------
// Twisted-pair position tracking.

namespace detail {

// Side of switchbox (bx, by) on which channel segment node n attaches, if any.
inline std::optional<Side> side_at(const RrNode& n, int bx, int by) {
  if (n.kind == NodeKind::ChanX && n.y == by) {
    if (n.x == bx) return Right;
    if (n.x + 1 == bx) return Left;
  }
  if (n.kind == NodeKind::ChanY && n.x == bx) {
    if (n.y == by) return Top;
    if (n.y + 1 == by) return Bottom;
  }
  return std::nullopt;
}

inline std::vector<std::pair<int, int>> corners(const RrNode& n) {
  if (n.kind == NodeKind::ChanX) return {{n.x, n.y}, {n.x + 1, n.y}};
  return {{n.x, n.y}, {n.x, n.y + 1}};
}

// Whether two wires keep their relative order through a box when they cross
// from side a to side b without intersecting.
inline bool natural_keeps_order(Side a, Side b) {
  if (a > b) std::swap(a, b);
  if ((a == Left && b == Right) || (a == Top && b == Bottom)) return true;
  if (a == Top && b == Right) return true;
  if (a == Left && b == Bottom) return true;
  return false; // left-top and right-bottom turns nest in reverse order
}

inline std::pair<Side, Side> box_sides(const RrNode& u, const RrNode& v) {
  for (auto [bx, by] : corners(u)) {
    auto su = side_at(u, bx, by), sv = side_at(v, bx, by);
    if (su && sv && *su != *sv) return {*su, *sv};
  }
  throw ValidationError("consecutive route segments do not meet at a switchbox");
}

} // namespace detail

/// Follows the partner rail of a bus through the same switchboxes as `path`
/// (channel nodes only), starting from `partner_start`.
inline std::vector<NodeId> trace_bus(const RrGraph& g, const std::vector<NodeId>& path, NodeId partner_start) {
  std::vector<NodeId> out{partner_start};
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int seg = g.node(path[k]).segment;
    NodeId next = no_node;
    for (const auto& arc : g.fanout(out.back()))
      if (g.node(arc.to).is_channel() && g.node(arc.to).segment == seg) {
        next = arc.to;
        break;
      }
    if (next == no_node) throw ValidationError("partner rail has no switch into segment " + std::to_string(seg));
    out.push_back(next);
  }
  return out;
}

struct RailPosition {
  int outer_length = 0;
  int inner_length = 0;
};

struct TwistBalance {
  bool applicable = false;
  int swaps = 0;
  RailPosition rail_a;
  RailPosition rail_b;
  std::vector<NodeId> partner_path;
};

/// Position of a two-wire bus along `path` (rail a) with the partner on the
/// paired track (index ^ 1). Rail a starts outer when its track index is the
/// lower one; each geometric crossing inside a switchbox swaps the rails.
inline TwistBalance twist_balance(const RrGraph& g, const std::vector<NodeId>& route_nodes) {
  TwistBalance tb;
  if (g.arch().switchbox_kind == SwitchboxKind::Subset) return tb;
  std::vector<NodeId> path;
  for (auto n : route_nodes)
    if (g.node(n).is_channel()) path.push_back(n);
  if (path.empty()) throw ValidationError("route has no channel segments");
  const auto& first = g.node(path.front());
  if ((first.track ^ 1) >= g.channel_width()) throw ValidationError("track has no partner for a bus");
  tb.applicable = true;
  tb.partner_path = trace_bus(g, path, g.chan_node(first.segment, first.track ^ 1));
  bool outer = first.track < (first.track ^ 1);
  auto count = [&] {
    (outer ? tb.rail_a.outer_length : tb.rail_a.inner_length)++;
    (outer ? tb.rail_b.inner_length : tb.rail_b.outer_length)++;
  };
  count();
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto &a0 = g.node(path[k - 1]), &a1 = g.node(path[k]);
    const auto &b0 = g.node(tb.partner_path[k - 1]), &b1 = g.node(tb.partner_path[k]);
    const auto [sa, sb] = detail::box_sides(a0, a1);
    const bool kept = (a0.track < b0.track) == (a1.track < b1.track);
    if (kept != detail::natural_keeps_order(sa, sb)) {
      ++tb.swaps;
      outer = !outer;
    }
    count();
  }
  return tb;
}

/// Line chart of one or more traces as a standalone SVG document.
inline std::string traces_svg(const std::vector<std::pair<std::string, Trace>>& traces, int width = 640,
                              int height = 320) {
  double tmax = 0, imax = 0, imin = 0;
  for (const auto& [name, t] : traces) {
    tmax = std::max(tmax, t.time(t.samples.empty() ? 0 : t.samples.size() - 1));
    for (double v : t.samples) {
      imax = std::max(imax, v);
      imin = std::min(imin, v);
    }
  }
  if (tmax <= 0) tmax = 1;
  if (imax - imin <= 0) imax = imin + 1;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::size_t ci = 0;
  for (const auto& [name, t] : traces) {
    const char* col = colors[ci % 4];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1\" points=\"";
    const std::size_t step = std::max<std::size_t>(1, t.samples.size() / 2000);
    for (std::size_t i = 0; i < t.samples.size(); i += step) {
      const double x = 40 + (width - 60) * t.time(i) / tmax;
      const double y = height - 30 - (height - 50) * (t.samples[i] - imin) / (imax - imin);
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << width - 150 << "\" y=\"" << 20 + 16 * ci << "\" fill=\"" << col
       << "\" font-size=\"12\">" << name << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace secfpga
