#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "secfpga/netlist.hpp"
#include "secfpga/rr_graph.hpp"

namespace secfpga {

// Raised when min_channel_width cannot find a routable width below its cap.
class RoutingFailure : public Error {
public:
  using Error::Error;
};

/// Negotiated-congestion parameters. Iteration 1 ignores congestion, so an
/// uncontested net gets a minimum-hop route; later iterations add present and
/// history penalties on shared channel nodes.
struct RouterParams {
  int max_iterations = 60;
  int stagnation_limit = 20; // give up after this many iterations without fewer overused nodes
  double initial_pres_fac = 0.5;
  double pres_fac_mult = 1.3;
  double hist_fac = 0.5;
  bool reroute_all = true; // false: rip up only nets touching overused nodes
};

enum class RouterChoice { BreadthFirst, DualBreadthFirst };

inline std::string_view to_string(RouterChoice r) {
  return r == RouterChoice::BreadthFirst ? "bf" : "dual-bf";
}

inline RouterChoice parse_router_choice(std::string_view s) {
  if (s == "bf") return RouterChoice::BreadthFirst;
  if (s == "dual-bf") return RouterChoice::DualBreadthFirst;
  throw ConfigurationError("unknown router '" + std::string(s) + "'");
}

/// Route of one net: nodes in insertion order with the parent of each (root first).
struct RouteTree {
  std::vector<NodeId> nodes;
  std::vector<NodeId> parent;

  bool empty() const { return nodes.empty(); }
  void clear() {
    nodes.clear();
    parent.clear();
  }
  void add(NodeId n, NodeId par) {
    nodes.push_back(n);
    parent.push_back(par);
  }
  bool contains(NodeId n) const { return std::find(nodes.begin(), nodes.end(), n) != nodes.end(); }
  bool operator==(const RouteTree&) const = default;
};

/// Channel segments used by a route tree.
inline int route_hops(const RouteTree& t, const RrGraph& g) {
  int h = 0;
  for (auto n : t.nodes) h += g.node(n).is_channel() ? 1 : 0;
  return h;
}

struct Routing {
  bool success = false;
  int channel_width = 0;
  int iterations = 0;
  std::vector<RouteTree> trees; // indexed like the netlist's nets
  std::vector<int> occupancy;   // per graph node
  std::vector<NodeId> congested;
  std::string message;
};

struct MismatchReport {
  std::vector<int> hop_mismatch; // per dual pair
  double mean_mismatch = 0.0;
  int max_mismatch = 0;
  int channel_width = 0;
};

/// |hops(rail0) - hops(rail1)|; multi-sink rails compare total tree segments.
inline int hop_mismatch(const Routing& r, const RrGraph& g, std::size_t rail1, std::size_t rail0) {
  if (rail1 >= r.trees.size() || rail0 >= r.trees.size() || r.trees[rail1].empty() ||
      r.trees[rail0].empty())
    throw ValidationError("hop_mismatch needs both rails routed");
  return std::abs(route_hops(r.trees[rail0], g) - route_hops(r.trees[rail1], g));
}

inline MismatchReport mismatch_report(const Routing& r, const RrGraph& g, const ResolvedNetlist& nl) {
  MismatchReport m;
  m.channel_width = r.channel_width;
  for (const auto& p : nl.pairs) m.hop_mismatch.push_back(hop_mismatch(r, g, p.rail1, p.rail0));
  if (!m.hop_mismatch.empty()) {
    double s = 0;
    for (int v : m.hop_mismatch) {
      s += v;
      m.max_mismatch = std::max(m.max_mismatch, v);
    }
    m.mean_mismatch = s / static_cast<double>(m.hop_mismatch.size());
  }
  return m;
}

namespace detail {

class NegotiatedRouter {
public:
  NegotiatedRouter(const RrGraph& g, const ResolvedNetlist& nl, const RouterParams& p, bool dual)
      : g_(g), nl_(nl), p_(p), dual_(dual), occ_(g.num_nodes(), 0), hist_(g.num_nodes(), 0.0),
        dist_(g.num_nodes(), 0.0), prev_(g.num_nodes(), no_node), stamp_(g.num_nodes(), 0) {}

  Routing run() {
    Routing r;
    r.channel_width = g_.channel_width();
    r.trees.resize(nl_.nets.size());
    trees_ = &r.trees;

    std::size_t best_over = std::numeric_limits<std::size_t>::max();
    int since_best = 0;
    std::vector<char> dirty(nl_.nets.size(), 1);
    for (int it = 1; it <= p_.max_iterations; ++it) {
      r.iterations = it;
      for (std::size_t i = 0; i < nl_.nets.size(); ++i) {
        if (!dirty[i]) continue;
        const int pair = dual_ ? nl_.pair_of[i] : -1;
        bool ok;
        if (pair >= 0) {
          const auto& pr = nl_.pairs[static_cast<std::size_t>(pair)];
          if (i != std::min(pr.rail1, pr.rail0)) continue;
          ok = route_pair(pr.rail1, pr.rail0);
        } else {
          ok = route_net(i);
        }
        if (!ok) {
          r.message = "net " + std::to_string(i) + " has no path to a sink";
          finish(r);
          return r;
        }
      }

      std::vector<NodeId> over;
      for (NodeId n = 0; n < static_cast<NodeId>(g_.num_nodes()); ++n)
        if (occ_[static_cast<std::size_t>(n)] > 1) over.push_back(n);
      if (over.empty()) {
        r.success = true;
        finish(r);
        return r;
      }
      for (auto n : over) hist_[static_cast<std::size_t>(n)] += p_.hist_fac * (occ_[static_cast<std::size_t>(n)] - 1);
      pres_ = it == 1 ? p_.initial_pres_fac : pres_ * p_.pres_fac_mult;

      if (over.size() < best_over) {
        best_over = over.size();
        since_best = 0;
      } else if (++since_best >= p_.stagnation_limit) {
        break;
      }

      // Only nets touching an overused node are ripped up next time.
      std::vector<char> hot(g_.num_nodes(), 0);
      for (auto n : over) hot[static_cast<std::size_t>(n)] = 1;
      for (std::size_t i = 0; i < nl_.nets.size(); ++i) {
        dirty[i] = p_.reroute_all;
        for (auto n : r.trees[i].nodes)
          if (hot[static_cast<std::size_t>(n)]) {
            dirty[i] = 1;
            break;
          }
      }
      if (dual_)
        for (const auto& pr : nl_.pairs)
          if (dirty[pr.rail1] || dirty[pr.rail0]) dirty[pr.rail1] = dirty[pr.rail0] = 1;
    }
    r.message = "congestion unresolved after " + std::to_string(r.iterations) + " iterations";
    finish(r);
    for (NodeId n = 0; n < static_cast<NodeId>(g_.num_nodes()); ++n)
      if (occ_[static_cast<std::size_t>(n)] > 1) r.congested.push_back(n);
    return r;
  }

private:
  void finish(Routing& r) { r.occupancy = occ_; }

  double node_cost(NodeId v) const {
    const auto& n = g_.node(v);
    if (!n.is_channel()) return 0.0;
    const auto i = static_cast<std::size_t>(v);
    return (1.0 + hist_[i]) * (1.0 + pres_ * occ_[i]);
  }

  void occupy(const RouteTree& t, int delta) {
    for (auto n : t.nodes)
      if (g_.node(n).is_channel()) occ_[static_cast<std::size_t>(n)] += delta;
  }

  // Least-cost expansion from the tree toward `target`. `step(u, v)` returns the
  // extra cost of moving u -> v, or a negative value when the move is forbidden.
  template <class Step>
  std::vector<NodeId> search(const RouteTree& tree, NodeId target, Step step) {
    ++cur_;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (auto n : tree.nodes) {
      touch(n, 0.0, no_node);
      pq.push({0.0, n});
    }
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist_[static_cast<std::size_t>(u)]) continue;
      if (u == target) {
        std::vector<NodeId> path;
        for (NodeId v = u; v != no_node && !tree.contains(v); v = prev_[static_cast<std::size_t>(v)])
          path.push_back(v);
        std::reverse(path.begin(), path.end());
        return path;
      }
      for (const auto& arc : g_.fanout(u)) {
        const double c = step(u, arc.to);
        if (c < 0) continue;
        const double nd = d + c;
        const auto vi = static_cast<std::size_t>(arc.to);
        if (stamp_[vi] != cur_ || nd < dist_[vi]) {
          touch(arc.to, nd, u);
          pq.push({nd, arc.to});
        }
      }
    }
    return {};
  }

  void touch(NodeId n, double d, NodeId from) {
    const auto i = static_cast<std::size_t>(n);
    stamp_[i] = cur_;
    dist_[i] = d;
    prev_[i] = from;
  }

  bool route_net(std::size_t i) {
    auto& tree = (*trees_)[i];
    occupy(tree, -1);
    tree.clear();
    const auto& net = nl_.nets[i];
    tree.add(net.source, no_node);
    auto sinks = net.sinks;
    std::sort(sinks.begin(), sinks.end());
    for (auto sink : sinks) {
      auto path = search(tree, sink, [&](NodeId, NodeId v) {
        const auto& n = g_.node(v);
        if (n.kind == NodeKind::Ipin) return v == sink ? 0.0 : -1.0;
        if (n.kind == NodeKind::Opin) return -1.0;
        return node_cost(v);
      });
      if (path.empty()) return false;
      NodeId par = prev_[static_cast<std::size_t>(path.front())];
      for (auto v : path) {
        tree.add(v, par);
        par = v;
      }
    }
    occupy(tree, +1);
    return true;
  }

  // Routes rail1 in the even-track domain over moves whose track-mirrored
  // counterpart also exists; rail0 is the mirror image on the odd tracks.
  bool route_pair(std::size_t r1, std::size_t r0) {
    auto& t1 = (*trees_)[r1];
    auto& t0 = (*trees_)[r0];
    occupy(t1, -1);
    occupy(t0, -1);
    t1.clear();
    t0.clear();
    const auto& n1 = nl_.nets[r1];
    const auto& n0 = nl_.nets[r0];
    const int W = g_.channel_width();
    NodeId sink1 = no_node, sink0 = no_node;
    auto mirror = [&](NodeId v) -> NodeId {
      if (v == n1.source) return n0.source;
      if (v == sink1) return sink0;
      const auto& n = g_.node(v);
      if (n.is_channel()) return v + 1;
      for (std::size_t k = 0; k < n1.sinks.size(); ++k)
        if (n1.sinks[k] == v) return n0.sinks[k];
      return no_node;
    };
    t1.add(n1.source, no_node);
    t0.add(n0.source, no_node);
    std::vector<std::size_t> order(n1.sinks.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return n1.sinks[a] < n1.sinks[b]; });
    for (auto k : order) {
      sink1 = n1.sinks[k];
      sink0 = n0.sinks[k];
      auto path = search(t1, sink1, [&](NodeId u, NodeId v) {
        const auto& n = g_.node(v);
        if (n.kind == NodeKind::Opin) return -1.0;
        if (n.kind == NodeKind::Ipin && v != sink1) return -1.0;
        if (n.is_channel() && (n.track % 2 != 0 || n.track + 1 >= W)) return -1.0;
        const NodeId mu = mirror(u), mv = mirror(v);
        if (mu == no_node || mv == no_node || !g_.find_switch(mu, mv)) return -1.0;
        return node_cost(v) + node_cost(mv);
      });
      if (path.empty()) return false;
      NodeId par = prev_[static_cast<std::size_t>(path.front())];
      for (auto v : path) {
        t1.add(v, par);
        t0.add(mirror(v), mirror(par));
        par = v;
      }
    }
    occupy(t1, +1);
    occupy(t0, +1);
    return true;
  }

  const RrGraph& g_;
  const ResolvedNetlist& nl_;
  RouterParams p_;
  bool dual_;
  double pres_ = 0.0;
  std::vector<int> occ_;
  std::vector<double> hist_;
  std::vector<double> dist_;
  std::vector<NodeId> prev_;
  std::vector<int> stamp_;
  int cur_ = 0;
  std::vector<RouteTree>* trees_ = nullptr;
};

} // namespace detail

/// Breadth-first maze routing with negotiated congestion. Deterministic: nets are
/// visited in netlist order and equal-cost expansions pop in ascending node id.
inline Routing route_bf(const ResolvedNetlist& nl, const RrGraph& g, const RouterParams& p = {}) {
  return detail::NegotiatedRouter(g, nl, p, false).run();
}

inline Routing route_bf(const PlacedNetlist& nl, const RrGraph& g, const RouterParams& p = {}) {
  return route_bf(resolve(nl, g), g, p);
}

// Dual routing needs tracks that map onto each other under i -> i+1.
inline void check_dual_preconditions(const ArchSpec& a) {
  if (a.switchbox_kind != SwitchboxKind::Subset)
    throw PreconditionError("dual-rail routing needs a subset switchbox fabric");
  if (a.driver_mode != DriverMode::Bidirectional)
    throw PreconditionError("dual-rail routing needs bidirectional tracks");
  if (a.channel_width % 2 != 0) throw PreconditionError("dual-rail routing needs an even channel width");
}

struct DualRouting {
  Routing routing;
  MismatchReport report;
};

/// Domain-partitioned dual-rail routing: rail1 on even tracks, rail0 on the
/// neighbouring odd track of every segment rail1 uses. Unpaired nets route freely.
inline DualRouting route_dual_bf(const ResolvedNetlist& nl, const RrGraph& g,
                                 const RouterParams& p = {}) {
  check_dual_preconditions(g.arch());
  DualRouting out;
  out.routing = detail::NegotiatedRouter(g, nl, p, true).run();
  if (out.routing.success) out.report = mismatch_report(out.routing, g, nl);
  out.report.channel_width = g.channel_width();
  return out;
}

inline DualRouting route_dual_bf(const PlacedNetlist& nl, const RrGraph& g, const RouterParams& p = {}) {
  return route_dual_bf(resolve(nl, g), g, p);
}

inline Routing route_with(RouterChoice choice, const ResolvedNetlist& nl, const RrGraph& g,
                          const RouterParams& p) {
  return choice == RouterChoice::BreadthFirst ? route_bf(nl, g, p) : route_dual_bf(nl, g, p).routing;
}

struct MinWidthResult {
  int channel_width = 0;
  Routing routing; // the routing found at channel_width
};

/// Search for the least routable channel width (even widths only for
/// dual routing and single-driver fabrics). An empty netlist needs W = 1.
inline MinWidthResult min_channel_width(const PlacedNetlist& nl, const ArchSpec& tmpl,
                                        RouterChoice choice, const RouterParams& p = {},
                                        int cap = 64) {
  const bool even = choice == RouterChoice::DualBreadthFirst || tmpl.driver_mode == DriverMode::SingleDriver;
  if (choice == RouterChoice::DualBreadthFirst) {
    ArchSpec probe = tmpl;
    probe.channel_width = 2;
    check_dual_preconditions(probe);
  }
  std::vector<int> widths;
  for (int w = even ? 2 : 1; w <= cap; w += even ? 2 : 1) widths.push_back(w);
  if (widths.empty()) throw RoutingFailure("channel width cap " + std::to_string(cap) + " too small");

  auto attempt = [&](int w) {
    ArchSpec a = arch_for(nl, tmpl);
    a.channel_width = w;
    RrGraph g(a);
    return route_with(choice, resolve(nl, g), g, p);
  };

  MinWidthResult best;
  if (nl.nets.empty()) {
    best.channel_width = widths.front();
    best.routing = attempt(best.channel_width);
    return best;
  }
  // Doubling probe for a routable width, then bisection below it.
  std::size_t lo = 0, hi = 0;
  for (;;) {
    auto r = attempt(widths[hi]);
    if (r.success) {
      best.channel_width = widths[hi];
      best.routing = std::move(r);
      break;
    }
    if (hi == widths.size() - 1)
      throw RoutingFailure("netlist '" + nl.name + "' unroutable at channel width cap " + std::to_string(cap));
    lo = hi + 1;
    hi = std::min(widths.size() - 1, 2 * hi + 1);
  }
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    auto r = attempt(widths[mid]);
    if (r.success) {
      hi = mid;
      best.channel_width = widths[mid];
      best.routing = std::move(r);
    } else {
      lo = mid + 1;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Routing dump: the architecture, the netlist and one `route` line per net with
// node:parent entries ('-' marks the root).

struct RoutingDump {
  ArchSpec arch;
  PlacedNetlist netlist;
  std::string router = "bf";
  std::vector<RouteTree> trees;
};

inline std::string to_text(const RoutingDump& d) {
  std::ostringstream os;
  os << "# secfpga routing dump v1\n";
  os << "router " << d.router << '\n';
  std::istringstream arch(to_text(d.arch));
  for (std::string line; std::getline(arch, line);) os << "arch " << line << '\n';
  os << to_text(d.netlist);
  for (std::size_t i = 0; i < d.trees.size(); ++i) {
    os << "route " << d.netlist.nets[i].id;
    const auto& t = d.trees[i];
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      os << ' ' << t.nodes[k] << ':';
      if (t.parent[k] == no_node) os << '-';
      else os << t.parent[k];
    }
    os << '\n';
  }
  return os.str();
}

inline RoutingDump parse_routing_dump(std::istream& in, const std::string& name = "<routing>") {
  RoutingDump d;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::string, RouteTree>> routes;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(trim(strip_comment(line)));
    if (tok.empty()) continue;
    try {
      if (tok[0] == "router") {
        if (tok.size() != 2) throw ValidationError("expected: router <name>");
        d.router = std::string(tok[1]);
      } else if (tok[0] == "arch") {
        if (tok.size() != 2) throw ValidationError("expected: arch key=value");
        auto eq = tok[1].find('=');
        if (eq == std::string_view::npos || !apply_arch_key(d.arch, tok[1].substr(0, eq), tok[1].substr(eq + 1)))
          throw ValidationError("bad arch entry '" + std::string(tok[1]) + "'");
      } else if (tok[0] == "route") {
        if (tok.size() < 2) throw ValidationError("expected: route <net> node:parent...");
        RouteTree t;
        for (std::size_t i = 2; i < tok.size(); ++i) {
          auto c = tok[i].find(':');
          if (c == std::string_view::npos) throw ValidationError("bad route entry '" + std::string(tok[i]) + "'");
          auto par = tok[i].substr(c + 1);
          t.add(parse_int(tok[i].substr(0, c)), par == "-" ? no_node : parse_int(par));
        }
        routes.emplace_back(std::string(tok[1]), std::move(t));
      } else if (!parse_netlist_statement(d.netlist, tok)) {
        throw ValidationError("unknown statement '" + std::string(tok[0]) + "'");
      }
    } catch (const ValidationError& e) {
      throw ParseError(name, lineno, e.what());
    } catch (const ConfigurationError& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  d.arch.validate();
  d.trees.resize(d.netlist.nets.size());
  for (auto& [net, t] : routes) {
    auto idx = d.netlist.net_index(net);
    if (!idx) throw ParseError(name, lineno, "route for unknown net '" + net + "'");
    d.trees[*idx] = std::move(t);
  }
  return d;
}

inline RoutingDump load_routing_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open routing dump '" + path + "'");
  return parse_routing_dump(in, path);
}

/// Checks that every tree is connected through graph switches and reaches its
/// net's sinks.
inline bool routing_is_legal(const Routing& r, const RrGraph& g, const ResolvedNetlist& nl,
                             std::string* why = nullptr) {
  auto fail = [&](std::string m) {
    if (why) *why = std::move(m);
    return false;
  };
  std::vector<int> occ(g.num_nodes(), 0);
  for (std::size_t i = 0; i < nl.nets.size(); ++i) {
    const auto& t = r.trees[i];
    if (t.empty() || t.nodes.front() != nl.nets[i].source) return fail("net " + std::to_string(i) + " root");
    for (std::size_t k = 1; k < t.nodes.size(); ++k) {
      if (!t.contains(t.parent[k])) return fail("net " + std::to_string(i) + " parent missing");
      if (!g.find_switch(t.parent[k], t.nodes[k])) return fail("net " + std::to_string(i) + " uses a missing switch");
    }
    for (auto s : nl.nets[i].sinks)
      if (!t.contains(s)) return fail("net " + std::to_string(i) + " misses a sink");
    for (auto n : t.nodes)
      if (g.node(n).is_channel() && ++occ[static_cast<std::size_t>(n)] > 1)
        return fail("node " + std::to_string(n) + " shared");
  }
  return true;
}

} // namespace secfpga
