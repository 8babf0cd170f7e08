#pragma once

#include <vector>

#include "flexdup/channel.hpp"
#include "flexdup/harness.hpp"
#include "flexdup/scenario.hpp"

namespace testutil {

/// Two cells 2 km apart, one UL and one DL service per cell, each service on
/// its own UE. Demands default to an even 50 kbit split.
inline flexdup::Scenario two_cell_scenario(double d1u = 12500.0, double d1d = 12500.0,
                                           double d2u = 12500.0, double d2d = 12500.0) {
  using namespace flexdup;
  std::vector<Point2> bs = {{0.0, 0.0}, {2000.0, 0.0}};
  std::vector<Point2> ue = {{300.0, 100.0}, {500.0, -200.0}, {1700.0, 150.0}, {1400.0, -80.0}};
  const double ue_p = dbm_to_watt(22.0);
  const double bs_p = dbm_to_watt(43.0);
  std::vector<Service> services = {
      {1, 0, 0, Direction::UL, d1u, ue_p},
      {2, 1, 0, Direction::DL, d1d, bs_p},
      {3, 2, 1, Direction::UL, d2u, ue_p},
      {4, 3, 1, Direction::DL, d2d, bs_p},
  };
  return make_scenario(std::move(bs), std::move(ue), std::move(services), MruGrid{});
}

/// Random but structurally valid two-cell instance for property tests:
/// geometry from the Monte-Carlo generator, demands from the ratio grid.
inline flexdup::Scenario random_two_cell(std::uint64_t seed) {
  using namespace flexdup;
  SweepConfig cfg;
  const auto inter = default_inter_ratios();
  const auto intra = default_intra_ratios();
  const std::uint64_t a = derive_seed(seed, 11);
  const std::uint64_t b = derive_seed(seed, 12);
  const std::uint64_t c = derive_seed(seed, 13);
  return generate_scenario(cfg, inter[a % (inter.size() - 1)], intra[b % intra.size()],
                           intra[c % intra.size()], seed);
}

/// Coupling for a scenario with a freshly drawn channel.
inline flexdup::LinkCoupling coupling_for(const flexdup::Scenario& scn, std::uint64_t seed,
                                          flexdup::InterferenceFlags flags = {}) {
  flexdup::ChannelParams params;
  params.seed = seed;
  const flexdup::ChannelMatrix chan = flexdup::build_channel(scn, params);
  return flexdup::build_coupling(scn, chan, params, flags);
}

}  // namespace testutil
