#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "secfpga/cli.hpp"

using namespace secfpga;
using namespace secfpga::cli;
namespace fs = std::filesystem;

namespace {

const std::string data_dir = SECFPGA_DATA_DIR;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / "secfpga_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

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

void write_file(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Runs `fn` twice into the same directory and returns both snapshots.
template <class F> std::pair<std::map<std::string, std::string>, std::map<std::string, std::string>>
run_twice(const fs::path& dir, F fn) {
  fs::remove_all(dir);
  EXPECT_EQ(run(fn, std::cerr), exit_ok);
  auto a = snapshot(dir);
  fs::remove_all(dir);
  EXPECT_EQ(run(fn, std::cerr), exit_ok);
  return {a, snapshot(dir)};
}

Common common(const fs::path& dir, int jobs = 1) {
  Common c;
  c.out_dir = dir.string();
  c.seed = 7;
  c.jobs = jobs;
  return c;
}

} // namespace

TEST(Cli, ArchReportPrototype) {
  const auto dir = scratch("arch");
  ArchReportArgs a{data_dir + "/prototype.arch", common(dir)};
  ASSERT_EQ(run([&] { cmd_arch_report(a); }, std::cerr), exit_ok);
  const auto files = snapshot(dir);
  EXPECT_NE(files.at("arch_report.txt").find("4691"), std::string::npos);
  EXPECT_NE(files.at("arch_report.csv").find("Total,,,4691"), std::string::npos);
  EXPECT_NE(files.at("arch_report.txt").find("# seed=7"), std::string::npos);
}

TEST(Cli, ArchReportUnitWidthFullBox) {
  const auto dir = scratch("arch_w1");
  ArchReportArgs a{data_dir + "/prototype.arch", common(dir)};
  a.common.overrides = {"channel_width=1", "fc_iob=1.0"};
  ASSERT_EQ(run([&] { cmd_arch_report(a); }, std::cerr), exit_ok);
  EXPECT_NE(snapshot(dir).at("arch_report.txt").find("full: switches=6 terminal_degree=3"), std::string::npos);
}

TEST(Cli, MalformedArchNamesLine) {
  const auto dir = scratch("bad_arch");
  write_file(dir / "bad.arch", "grid_w=3\nchannel_width=eight\n");
  ArchReportArgs a{(dir / "bad.arch").string(), common(dir / "out")};
  std::ostringstream err;
  EXPECT_EQ(run([&] { cmd_arch_report(a); }, err), exit_validation);
  EXPECT_NE(err.str().find(":2"), std::string::npos) << err.str();
}

TEST(Cli, EveryCommandIsDeterministic) {
  const auto root = scratch("determinism");

  GenSuiteArgs g{4, {}, common(root / "suite")};
  g.suite.max_grid = 3;
  auto [s1, s2] = run_twice(root / "suite", [&] { cmd_gen_suite(g); });
  EXPECT_EQ(s1, s2);

  RouteArgs r;
  r.arch = data_dir + "/prototype.arch";
  r.netlists = {data_dir + "/sample.net"};
  r.routers = {"bf", "dual-bf"};
  r.common = common(root / "route");
  auto [r1, r2] = run_twice(root / "route", [&] { cmd_route(r); });
  EXPECT_EQ(r1, r2);

  RouteArgs rs = r;
  rs.netlists.clear();
  for (const auto& [name, body] : s1)
    if (name != "manifest.txt") rs.netlists.push_back((root / "suite" / name).string());
  rs.min_width = true;
  rs.common = common(root / "route_suite", 4);
  auto [m1, m2] = run_twice(root / "route_suite", [&] { cmd_route(rs); });
  EXPECT_EQ(m1, m2);
  EXPECT_TRUE(m1.count("width_comparison.csv"));

  AnalyzeArgs an;
  an.dumps = {(root / "route" / "sample.bf.route").string(), (root / "route" / "sample.dual-bf.route").string()};
  an.library = data_dir + "/step_library.txt";
  an.plot = "svg";
  an.common = common(root / "analyze", 1);
  auto [a1, a2] = run_twice(root / "analyze", [&] { cmd_analyze(an); });
  EXPECT_EQ(a1, a2);
  AnalyzeArgs an4 = an;
  an4.common.jobs = 4;
  auto [a4, unused] = run_twice(root / "analyze", [&] { cmd_analyze(an4); });
  EXPECT_EQ(a1.at("analysis.csv"), a4.at("analysis.csv"));

  BitstreamArgs b{(root / "route" / "sample.dual-bf.route").string(), data_dir + "/prototype.arch",
                  data_dir + "/gates.txt", common(root / "bitstream")};
  auto [b1, b2] = run_twice(root / "bitstream", [&] { cmd_bitstream(b); });
  EXPECT_EQ(b1, b2);

  write_file(root / "input.bits", b1.at("bitstream.txt"));
  SimulateArgs sim;
  sim.arch = data_dir + "/prototype.arch";
  sim.bitstream = (root / "input.bits").string();
  sim.bug = true;
  sim.common = common(root / "simulate");
  auto [c1, c2] = run_twice(root / "simulate", [&] { cmd_simulate_config(sim); });
  EXPECT_EQ(c1, c2);
}

TEST(Cli, DualRouteMismatchColumnIsZero) {
  const auto dir = scratch("dual_metrics");
  RouteArgs r;
  r.arch = data_dir + "/prototype.arch";
  r.netlists = {data_dir + "/sample.net"};
  r.routers = {"dual-bf"};
  r.common = common(dir);
  ASSERT_EQ(run([&] { cmd_route(r); }, std::cerr), exit_ok);
  std::istringstream csv(snapshot(dir).at("metrics.csv"));
  std::string line;
  std::getline(csv, line); // seed
  std::getline(csv, line); // header
  while (std::getline(csv, line)) EXPECT_NE(line.find(",0,0,"), std::string::npos) << line;
}

TEST(Cli, RoutingFailureExitCode) {
  const auto dir = scratch("route_fail");
  RouteArgs r;
  r.arch = data_dir + "/prototype.arch";
  r.netlists = {data_dir + "/sample.net"};
  r.common = common(dir);
  r.common.overrides = {"channel_width=1", "fc_iob=1.0"};
  r.params.max_iterations = 5;
  std::ostringstream err;
  EXPECT_EQ(run([&] { cmd_route(r); }, err), exit_routing);
  EXPECT_TRUE(fs::exists(dir / "congestion_report.txt"));
}

TEST(Cli, HashMismatchRefused) {
  const auto dir = scratch("refuse");
  write_file(dir / "other.bits", "arch_hash=0000000000000000\n0101\n");
  SimulateArgs sim;
  sim.arch = data_dir + "/prototype.arch";
  sim.bitstream = (dir / "other.bits").string();
  sim.common = common(dir / "out");
  EXPECT_EQ(run([&] { cmd_simulate_config(sim); }, std::cerr), exit_refused);
}

TEST(Cli, OverfullBitstreamDeadlocks) {
  const auto dir = scratch("deadlock");
  write_file(dir / "small.arch", "grid_w=1\ngrid_h=1\nchannel_width=2\n");
  const auto a = load_arch((dir / "small.arch").string());
  Bitstream b{arch_hash_hex(a), std::vector<bool>(RrGraph(a).total_config_bits() + 1, true)};
  write_file(dir / "big.bits", to_text(b));
  SimulateArgs sim;
  sim.arch = (dir / "small.arch").string();
  sim.bitstream = (dir / "big.bits").string();
  sim.log = "none";
  sim.common = common(dir / "out");
  EXPECT_EQ(run([&] { cmd_simulate_config(sim); }, std::cerr), exit_deadlock);
}

TEST(Cli, BugOnZerosVersusOnes) {
  const auto dir = scratch("bug");
  write_file(dir / "small.arch", "grid_w=1\ngrid_h=1\nchannel_width=2\n");
  const auto a = load_arch((dir / "small.arch").string());
  const auto n = RrGraph(a).total_config_bits();
  auto report = [&](bool ones) {
    Bitstream b{arch_hash_hex(a), std::vector<bool>(n, ones)};
    write_file(dir / "in.bits", to_text(b));
    SimulateArgs sim;
    sim.arch = (dir / "small.arch").string();
    sim.bitstream = (dir / "in.bits").string();
    sim.bug = true;
    sim.common = common(dir / "out");
    EXPECT_EQ(run([&] { cmd_simulate_config(sim); }, std::cerr), exit_ok);
    return snapshot(dir / "out").at("config_report.txt");
  };
  EXPECT_NE(report(false).find("corruption_events=0 "), std::string::npos);
  EXPECT_EQ(report(true).find("corruption_events=0 "), std::string::npos);
}

TEST(Cli, MissingLibraryEntryDiagnosed) {
  const auto dir = scratch("missing_lib");
  RouteArgs r;
  r.arch = data_dir + "/prototype.arch";
  r.netlists = {data_dir + "/sample.net"};
  r.common = common(dir / "route");
  ASSERT_EQ(run([&] { cmd_route(r); }, std::cerr), exit_ok);
  write_file(dir / "partial.lib", "buffer 1 1 1 1\nsegment 1 1 1 1\n");
  AnalyzeArgs an;
  an.dumps = {(dir / "route" / "sample.bf.route").string()};
  an.library = (dir / "partial.lib").string();
  an.common = common(dir / "out");
  std::ostringstream err;
  EXPECT_EQ(run([&] { cmd_analyze(an); }, err), exit_validation);
  EXPECT_NE(err.str().find("switch"), std::string::npos) << err.str();
}

TEST(Cli, OutputsNeverOverwriteInputs) {
  const auto dir = scratch("no_clobber");
  fs::copy_file(data_dir + "/prototype.arch", dir / "arch_report.txt");
  ArchReportArgs a{(dir / "arch_report.txt").string(), common(dir)};
  EXPECT_EQ(run([&] { cmd_arch_report(a); }, std::cerr), exit_validation);
  std::ifstream in(dir / "arch_report.txt");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# 3x3 prototype fabric");
}

TEST(Cli, ManifestRoundTripAndEnvDirectory) {
  const auto dir = scratch("manifest");
  setenv(out_dir_env, dir.string().c_str(), 1);
  ArchReportArgs a{data_dir + "/prototype.arch", {}};
  a.common.seed = 42;
  a.common.overrides = {"channel_width=4"};
  ASSERT_EQ(run([&] { cmd_arch_report(a); }, std::cerr), exit_ok);
  unsetenv(out_dir_env);
  const auto text = snapshot(dir).at("manifest.txt");
  std::istringstream in(text);
  const auto m = parse_manifest(in);
  EXPECT_EQ(m.subcommand, "arch-report");
  EXPECT_EQ(m.seed, 42u);
  EXPECT_EQ(m.overrides.at(0), (std::pair<std::string, std::string>{"channel_width", "4"}));
  EXPECT_EQ(to_text(m), text);
}
