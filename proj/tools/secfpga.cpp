#include <iostream>

#include <CLI11.hpp>

#include "secfpga/cli.hpp"

using namespace secfpga;
using namespace secfpga::cli;

namespace {

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out_dir, std::string("output directory (default: $") + out_dir_env + " or " +
                                          default_out_dir + ")");
  app->add_option("--seed", c.seed, "random seed recorded in every output");
  app->add_option("--set", c.overrides, "architecture override key=value (repeatable)");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure dual-rail FPGA fabric toolkit"};
  app.require_subcommand(1);

  ArchReportArgs arch_args;
  auto* arch = app.add_subcommand("arch-report", "configuration-bit and switchbox report");
  arch->add_option("arch", arch_args.arch, "architecture file")->required();
  add_common(arch, arch_args.common);

  RouteArgs route_args;
  auto* route = app.add_subcommand("route", "route netlists and write dumps plus metrics");
  route->add_option("arch", route_args.arch, "architecture file")->required();
  route->add_option("netlists", route_args.netlists, "placed netlist files")->required();
  route->add_option("--router", route_args.routers, "bf or dual-bf (repeatable)");
  route->add_flag("--min-width", route_args.min_width, "search the least routable channel width");
  route->add_option("--width-cap", route_args.width_cap, "largest width tried by --min-width");
  route->add_option("--max-iterations", route_args.params.max_iterations, "negotiation iterations");
  add_common(route, route_args.common);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "balance and cross-correlation of routed rail pairs");
  analyze->add_option("routing", analyze_args.dumps, "routing dump files")->required();
  analyze->add_option("--library", analyze_args.library, "step-response library file");
  analyze->add_option("--plot", analyze_args.plot, "write trace plots")->check(CLI::IsMember({"svg"}));
  analyze->add_option("--edge", analyze_args.edge, "rise or fall")->check(CLI::IsMember({"rise", "fall"}));
  analyze->add_option("--max-lag", analyze_args.max_lag, "cross-correlation lag bound in samples");
  analyze->add_option("--sweep", analyze_args.sweep, "hop mismatches for the balance sweep");
  add_common(analyze, analyze_args.common);

  BitstreamArgs bit_args;
  auto* bitstream = app.add_subcommand("bitstream", "configuration bitstream of a routed design");
  bitstream->add_option("routing", bit_args.dump, "routing dump file")->required();
  bitstream->add_option("--arch", bit_args.arch, "architecture file to check against");
  bitstream->add_option("--gates", bit_args.gates, "gate library file");
  add_common(bitstream, bit_args.common);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate-config", "load a bitstream through the configuration chain");
  sim->add_option("arch", sim_args.arch, "architecture file")->required();
  sim->add_option("bitstream", sim_args.bitstream, "bitstream file")->required();
  sim->add_flag("--bug", sim_args.bug, "enable the transmission-gate fault model");
  sim->add_option("--period", sim_args.period_ps, "minimum symbol period in ps");
  sim->add_option("--threshold", sim_args.threshold_ps, "fault threshold in ps (default: twice the forward latency)");
  sim->add_option("--forward", sim_args.timing.forward_ps, "stage forward latency in ps");
  sim->add_option("--precharge", sim_args.timing.precharge_ps, "stage precharge latency in ps");
  sim->add_option("--log", sim_args.log, "event log: none, boundary or full")
      ->check(CLI::IsMember({"none", "boundary", "full"}));
  add_common(sim, sim_args.common);

  GenSuiteArgs suite_args;
  auto* suite = app.add_subcommand("gen-suite", "write a seeded synthetic dual-rail netlist suite");
  suite->add_option("--count", suite_args.count, "number of netlists");
  suite->add_option("--min-grid", suite_args.suite.min_grid, "smallest grid side");
  suite->add_option("--max-grid", suite_args.suite.max_grid, "largest grid side");
  add_common(suite, suite_args.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_validation;
  }

  return run(
      [&] {
        if (*arch) cmd_arch_report(arch_args);
        else if (*route) cmd_route(route_args);
        else if (*analyze) cmd_analyze(analyze_args);
        else if (*bitstream) cmd_bitstream(bit_args);
        else if (*sim) cmd_simulate_config(sim_args);
        else if (*suite) cmd_gen_suite(suite_args);
      },
      std::cerr);
}
