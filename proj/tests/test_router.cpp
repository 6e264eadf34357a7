#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <sstream>

#include "secfpga/generator.hpp"
#include "secfpga/router.hpp"

using namespace secfpga;

namespace {

ArchSpec grid(int w, int h, int W) {
  ArchSpec a;
  a.grid_w = w;
  a.grid_h = h;
  a.channel_width = W;
  return a;
}

PlacedNetlist two_plbs() {
  PlacedNetlist nl;
  nl.blocks = {{"a", BlockKind::PLB, 0, 0, ""}, {"b", BlockKind::PLB, 1, 0, ""}};
  return nl;
}

PlacedNetlist pair_netlist() {
  auto nl = two_plbs();
  nl.nets = {{"t", parse_pin("a:o0"), {parse_pin("b:i0")}}, {"f", parse_pin("a:o1"), {parse_pin("b:i1")}}};
  nl.dual_pairs = {{"t", "f"}};
  return nl;
}

// Plain BFS over channel nodes, counting channel segments on the path.
int oracle_hops(const RrGraph& g, NodeId src, NodeId dst) {
  std::vector<int> dist(g.num_nodes(), -1);
  std::deque<NodeId> q{src};
  dist[static_cast<std::size_t>(src)] = 0;
  while (!q.empty()) {
    auto u = q.front();
    q.pop_front();
    if (u == dst) return dist[static_cast<std::size_t>(u)] - 1;
    for (const auto& a : g.fanout(u)) {
      const auto& n = g.node(a.to);
      if (!n.is_channel() && a.to != dst) continue;
      if (dist[static_cast<std::size_t>(a.to)] >= 0) continue;
      dist[static_cast<std::size_t>(a.to)] = dist[static_cast<std::size_t>(u)] + 1;
      q.push_back(a.to);
    }
  }
  return -1;
}

} // namespace

TEST(RouterBf, HandTracedAdjacentRoute) {
  RrGraph g(grid(2, 1, 2));
  auto nl = two_plbs();
  nl.nets = {{"n", parse_pin("a:o0"), {parse_pin("b:i0")}}};
  auto r = route_bf(nl, g);
  ASSERT_TRUE(r.success);
  const auto& t = r.trees[0];
  const std::vector<NodeId> expect{g.output_pin(0, 0), g.chan_node(g.vseg(1, 0), 0), g.chan_node(g.hseg(1, 1), 0),
                                   g.input_pin(1, 0)};
  EXPECT_EQ(t.nodes, expect);
  EXPECT_EQ(route_hops(t, g), 2);
}

TEST(RouterBf, PigeonholeFailure) {
  RrGraph g(grid(2, 1, 1));
  auto nl = two_plbs();
  nl.nets = {{"n0", parse_pin("a:o0"), {parse_pin("b:i0")}}, {"n1", parse_pin("a:o1"), {parse_pin("b:i1")}}};
  auto r = route_bf(nl, g);
  EXPECT_FALSE(r.success);
  EXPECT_FALSE(r.congested.empty());
  EXPECT_FALSE(r.message.empty());
}

TEST(RouterBf, MinimumHopAgainstOracle) {
  RrGraph g(grid(3, 3, 4));
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int a = static_cast<int>(rng() % 9), b = static_cast<int>(rng() % 9);
    if (a == b) continue;
    PlacedNetlist nl;
    nl.blocks = {{"a", BlockKind::PLB, a % 3, a / 3, ""}, {"b", BlockKind::PLB, b % 3, b / 3, ""}};
    const int o = static_cast<int>(rng() % 7), i = static_cast<int>(rng() % 12);
    nl.nets = {{"n", {"a", true, o}, {{"b", false, i}}}};
    auto r = route_bf(nl, g);
    ASSERT_TRUE(r.success);
    EXPECT_EQ(route_hops(r.trees[0], g), oracle_hops(g, g.output_pin(a, o), g.input_pin(b, i)));
  }
}

TEST(RouterBf, LegalAndDeterministicOnSuite) {
  SuiteParams sp;
  sp.max_grid = 4;
  for (int s = 1; s <= 5; ++s) {
    auto nl = generate_wddl_netlist(static_cast<std::uint64_t>(s), sp);
    RrGraph g(arch_for(nl, grid(1, 1, 20)));
    auto res = resolve(nl, g);
    auto r1 = route_bf(res, g);
    auto r2 = route_bf(res, g);
    ASSERT_TRUE(r1.success) << nl.name << ": " << r1.message;
    std::string why;
    EXPECT_TRUE(routing_is_legal(r1, g, res, &why)) << why;
    EXPECT_EQ(r1.trees, r2.trees);
  }
}

TEST(RouterDual, MirrorOfFreeFabricPair) {
  RrGraph g(grid(2, 1, 2));
  auto nl = pair_netlist();
  auto d = route_dual_bf(nl, g);
  ASSERT_TRUE(d.routing.success);
  const auto& t1 = d.routing.trees[0];
  const auto& t0 = d.routing.trees[1];
  ASSERT_EQ(t1.nodes.size(), t0.nodes.size());
  for (std::size_t k = 0; k < t1.nodes.size(); ++k)
    if (g.node(t1.nodes[k]).is_channel()) { EXPECT_EQ(t0.nodes[k], t1.nodes[k] + 1); }
  EXPECT_EQ(d.report.hop_mismatch, std::vector<int>{0});
}

TEST(RouterDual, ZeroMismatchAndDomainsOnRandomSuite) {
  SuiteParams sp;
  sp.max_grid = 5;
  for (int s = 1; s <= 8; ++s) {
    auto nl = generate_wddl_netlist(static_cast<std::uint64_t>(100 + s), sp);
    RrGraph g(arch_for(nl, grid(1, 1, 20)));
    auto res = resolve(nl, g);
    auto d = route_dual_bf(res, g);
    ASSERT_TRUE(d.routing.success) << nl.name << ": " << d.routing.message;
    std::string why;
    EXPECT_TRUE(routing_is_legal(d.routing, g, res, &why)) << why;
    for (int m : d.report.hop_mismatch) EXPECT_EQ(m, 0);
    for (const auto& p : res.pairs) {
      for (auto n : d.routing.trees[p.rail1].nodes)
        if (g.node(n).is_channel()) { EXPECT_EQ(g.node(n).track % 2, 0); }
      for (auto n : d.routing.trees[p.rail0].nodes)
        if (g.node(n).is_channel()) { EXPECT_EQ(g.node(n).track % 2, 1); }
    }
  }
}

TEST(RouterDual, Preconditions) {
  auto nl = pair_netlist();
  auto a = grid(2, 1, 3);
  EXPECT_THROW(route_dual_bf(nl, RrGraph(a)), PreconditionError);
  a.channel_width = 4;
  a.switchbox_kind = SwitchboxKind::TwistOnTurn;
  EXPECT_THROW(route_dual_bf(nl, RrGraph(a)), PreconditionError);
  a.switchbox_kind = SwitchboxKind::Subset;
  a.driver_mode = DriverMode::SingleDriver;
  EXPECT_THROW(route_dual_bf(nl, RrGraph(a)), PreconditionError);
}

TEST(MinWidth, TrivialCases) {
  auto tmpl = grid(2, 1, 8);
  auto single = two_plbs();
  single.nets = {{"n", parse_pin("a:o0"), {parse_pin("b:i0")}}};
  EXPECT_EQ(min_channel_width(single, tmpl, RouterChoice::BreadthFirst).channel_width, 1);
  EXPECT_EQ(min_channel_width(pair_netlist(), tmpl, RouterChoice::DualBreadthFirst).channel_width, 2);
  EXPECT_EQ(min_channel_width(two_plbs(), tmpl, RouterChoice::BreadthFirst).channel_width, 1);
}

TEST(MinWidth, CapExceeded) {
  auto nl = two_plbs();
  nl.nets = {{"n0", parse_pin("a:o0"), {parse_pin("b:i0")}}, {"n1", parse_pin("a:o1"), {parse_pin("b:i1")}}};
  EXPECT_THROW(min_channel_width(nl, grid(2, 1, 8), RouterChoice::BreadthFirst, {}, 1), RoutingFailure);
}

TEST(Mismatch, Conventions) {
  RrGraph g(grid(3, 1, 4));
  Routing r;
  RouteTree a, b;
  a.add(g.output_pin(0, 0), no_node);
  a.add(g.chan_node(0, 0), g.output_pin(0, 0));
  b.add(g.output_pin(0, 1), no_node);
  NodeId par = g.output_pin(0, 1);
  for (int k = 0; k < 8; ++k) {
    b.add(g.chan_node(k % g.num_segments(), 1 + k / g.num_segments()), par);
    par = b.nodes.back();
  }
  r.trees = {a, a, b};
  EXPECT_EQ(hop_mismatch(r, g, 0, 1), 0);
  EXPECT_EQ(hop_mismatch(r, g, 0, 2), 7);
  r.trees.push_back({});
  EXPECT_THROW(hop_mismatch(r, g, 0, 3), ValidationError);

  // Two-sink rails: totals over the tree.
  RouteTree m1, m0;
  m1.add(g.output_pin(0, 0), no_node);
  m1.add(g.chan_node(0, 0), m1.nodes[0]);
  m1.add(g.chan_node(1, 0), m1.nodes[1]);
  m1.add(g.chan_node(2, 0), m1.nodes[1]);
  m0.add(g.output_pin(0, 1), no_node);
  m0.add(g.chan_node(0, 1), m0.nodes[0]);
  m0.add(g.chan_node(1, 1), m0.nodes[1]);
  r.trees = {m1, m0};
  EXPECT_EQ(hop_mismatch(r, g, 0, 1), 1);
}

TEST(RoutingDump, RoundTrip) {
  auto nl = generate_wddl_netlist(3, {2, 3});
  RoutingDump d;
  d.arch = arch_for(nl, grid(1, 1, 10));
  d.netlist = nl;
  RrGraph g(d.arch);
  d.trees = route_bf(nl, g).trees;
  const auto text = to_text(d);
  std::istringstream in(text);
  auto back = parse_routing_dump(in);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.trees, d.trees);

  std::istringstream bad("arch grid_w=2\nroute\n");
  EXPECT_THROW(parse_routing_dump(bad), ParseError);
}

TEST(Generator, DeterministicAndValid) {
  auto a = generate_suite(10, 42);
  auto b = generate_suite(10, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_text(a[i]), to_text(b[i]));
    RrGraph g(arch_for(a[i], ArchSpec{}));
    auto res = resolve(a[i], g);
    EXPECT_FALSE(res.pairs.empty());
    EXPECT_EQ(res.pairs.size() * 2, res.nets.size());
  }
}
