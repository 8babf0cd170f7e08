// Minimal library walkthrough: one random two-cell instance, all five
// protocols, worst-case satisfaction side by side.

#include <cstdio>

#include "flexdup/flexdup.hpp"

int main() {
  using namespace flexdup;

  SweepConfig cfg;
  cfg.solver.seed = 7;
  const Scenario scn = generate_scenario(cfg, {7, 3}, {2, 8}, {6, 4}, /*run_seed=*/7);

  ChannelParams channel;
  channel.seed = 11;
  const ChannelMatrix chan = build_channel(scn, channel);
  const LinkCoupling coupling = build_coupling(scn, chan, channel, InterferenceFlags{});

  std::printf("services: %d  traffic distance: %.3f\n", scn.num_services(),
              traffic_distance(scn));
  std::printf("%-6s %10s %10s %s\n", "proto", "rho", "load", "converged");
  for (Protocol protocol : all_protocols()) {
    const SolveOutcome out = solve_with(protocol, scn, coupling, scn.grid, cfg.solver);
    std::printf("%-6s %10.4f %10.4f %s\n", to_string(protocol), out.rho_star,
                g_norm(scn, out.w_star), out.converged ? "yes" : "no");
  }
  return 0;
}
