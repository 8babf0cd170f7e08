#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "flexdup/channel.hpp"
#include "flexdup/interference.hpp"
#include "flexdup/rng.hpp"
#include "flexdup/scenario.hpp"
#include "helpers.hpp"

using namespace flexdup;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// One UL service in cell 1 and one DL service in cell 2 on a 20-unit grid,
/// used to probe single pairs of loads.
Scenario cross_mode_pair(int units) {
  std::vector<Point2> bs = {{0.0, 0.0}, {2000.0, 0.0}};
  std::vector<Point2> ue = {{500.0, 0.0}, {1500.0, 0.0}};
  std::vector<Service> services = {{1, 0, 0, Direction::UL, 1000.0, 0.1},
                                   {2, 1, 1, Direction::DL, 1000.0, 0.1}};
  MruGrid grid;
  grid.w_t = units;
  grid.w_f = 1;
  return make_scenario(bs, ue, services, grid);
}

LinkCoupling hand_coupling(Mat v_tilde, Vec sigma_tilde) {
  return LinkCoupling{std::move(v_tilde), std::move(sigma_tilde)};
}

}  // namespace

TEST_CASE("overlap factors follow the load geometry", "[interference]") {
  const Scenario scn = testutil::two_cell_scenario();
  // Service order: UL cell 1, DL cell 1, UL cell 2, DL cell 2.

  SECTION("opposite modes at half load never meet") {
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{0.5, 0.5, 0.5, 0.5}});
    CHECK(reuse.c(0, 3) == 0.0);
    CHECK(reuse.c(1, 2) == 0.0);
  }

  SECTION("opposite modes overlap in the excess over the plane") {
    // Interferer load 0.8 (UL cell 1), victim load 0.6 (DL cell 2).
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{0.8, 0.1, 0.1, 0.6}});
    CHECK_THAT(reuse.c(0, 3), WithinRel(0.4 / 0.6, 1e-12));
  }

  SECTION("same mode covers the smaller load fully") {
    // Interferer load 0.4 (UL cell 1), victim load 0.8 (UL cell 2).
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{0.4, 0.1, 0.8, 0.1}});
    CHECK(reuse.c(0, 2) == 0.5);
    CHECK(reuse.c(2, 0) == 1.0);
  }

  SECTION("full cross-mode load overlaps completely") {
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{1.0, 0.0, 0.0, 1.0}});
    CHECK(reuse.c(0, 3) == 1.0);
  }

  SECTION("a zero-load victim takes no overlap") {
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{0.5, 0.5, 0.5, 0.0}});
    for (int l = 0; l < 4; ++l) CHECK(reuse.c(l, 3) == 0.0);
  }

  SECTION("same mode and cell with positive load couples fully") {
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{0.3, 0.2, 0.4, 0.1}});
    for (int j = 0; j < 4; ++j) CHECK(reuse.c(j, j) == 1.0);
  }
}

TEST_CASE("cross-mode overlap matches the discrete placement count exactly",
          "[interference][oracle]") {
  // On a 20-unit grid, a units filled from the front and b units from the
  // back overlap in max(0, a+b-20) units; the fractional model must agree
  // bit for bit for every integer pair.
  const int units = 20;
  const Scenario scn = cross_mode_pair(units);
  for (int a = 0; a <= units; ++a) {
    for (int b = 0; b <= units; ++b) {
      const double w_a = static_cast<double>(a) / units;
      const double w_b = static_cast<double>(b) / units;
      const ReuseCoupling reuse = reuse_coupling(scn, Allocation{{w_a, w_b}});
      const double expected =
          b == 0 ? 0.0
                 : static_cast<double>(std::max(0, a + b - units)) / static_cast<double>(b);
      REQUIRE(reuse.c(0, 1) == expected);
    }
  }
}

TEST_CASE("overlap factors stay within the unit interval", "[interference]") {
  auto engine = make_engine(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const Scenario scn = testutil::random_two_cell(derive_seed(500, rep));
    Vec w(scn.num_services());
    for (double& x : w) x = unit(engine);
    // Scale each cell to a load at most 1.
    const CellLoads raw = cell_loads(scn, Allocation{w});
    for (int j = 0; j < scn.num_services(); ++j) {
      const double load = raw.nu[scn.services[j].bs];
      if (load > 1.0) w[j] /= load;
    }
    const ReuseCoupling reuse = reuse_coupling(scn, Allocation{w});
    for (int l = 0; l < scn.num_services(); ++l) {
      for (int s = 0; s < scn.num_services(); ++s) {
        REQUIRE(reuse.c(l, s) >= 0.0);
        REQUIRE(reuse.c(l, s) <= 1.0);
      }
    }
  }
}

TEST_CASE("collision-probability SINR sums weighted interference", "[interference]") {
  Mat v(2, 2);
  v(1, 0) = 0.2;
  v(0, 1) = 0.3;
  const LinkCoupling coupling = hand_coupling(v, {0.01, 0.02});

  SECTION("no allocation leaves pure noise") {
    const Vec sinr = sinr_legacy(coupling, Allocation{{0.0, 0.0}}, {1.0, 1.0});
    CHECK(sinr[0] == 1.0 / 0.01);
    CHECK(sinr[1] == 1.0 / 0.02);
  }

  SECTION("hand-evaluated two-service case") {
    const Vec sinr = sinr_legacy(coupling, Allocation{{0.0, 0.5}}, {1.0, 1.0});
    CHECK_THAT(sinr[0], WithinRel(1.0 / 0.11, 1e-12));
  }

  SECTION("power scaling cancels without noise") {
    const LinkCoupling noiseless = hand_coupling(v, {0.0, 0.0});
    const Allocation alloc{{0.4, 0.6}};
    const Vec base = sinr_legacy(noiseless, alloc, {1.0, 2.0});
    const Vec doubled = sinr_legacy(noiseless, alloc, {2.0, 4.0});
    CHECK(base[0] == doubled[0]);
    CHECK(base[1] == doubled[1]);
  }
}

TEST_CASE("ordered-placement SINR weights interference by overlap", "[interference]") {
  SECTION("all-ones overlap reduces to the collision model") {
    const Scenario scn = testutil::two_cell_scenario();
    const LinkCoupling coupling = testutil::coupling_for(scn, 31);
    const Vec p = per_mru_powers(scn);
    ReuseCoupling ones;
    ones.c = Mat(4, 4, 1.0);
    auto engine = make_engine(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
      Vec w(4);
      for (double& x : w) x = unit(engine);
      const Vec flex = sinr_flex(coupling, ones, Allocation{w}, p);
      const Vec legacy = sinr_legacy(coupling, Allocation{w}, p);
      for (int j = 0; j < 4; ++j) REQUIRE_THAT(flex[j], WithinRel(legacy[j], 1e-12));
    }
  }

  SECTION("same-mode different-cell pair at half load") {
    std::vector<Point2> bs = {{0.0, 0.0}, {2000.0, 0.0}};
    std::vector<Point2> ue = {{500.0, 0.0}, {1500.0, 0.0}};
    std::vector<Service> services = {{1, 0, 0, Direction::UL, 1000.0, 0.1},
                                     {2, 1, 1, Direction::UL, 1000.0, 0.1}};
    const Scenario scn = make_scenario(bs, ue, services, MruGrid{});
    Mat v(2, 2);
    v(1, 0) = 0.2;
    v(0, 1) = 0.2;
    const LinkCoupling coupling = hand_coupling(v, {0.01, 0.01});
    const Allocation alloc{{0.5, 0.5}};
    const ReuseCoupling reuse = reuse_coupling(scn, alloc);
    CHECK(reuse.c(1, 0) == 1.0);
    const Vec sinr = sinr_flex(coupling, reuse, alloc, {1.0, 1.0});
    CHECK_THAT(sinr[0], WithinRel(1.0 / 0.11, 1e-12));
  }

  SECTION("cross-mode pair at half load sees no interference") {
    const Scenario scn = cross_mode_pair(20);
    Mat v(2, 2);
    v(1, 0) = 0.2;
    v(0, 1) = 0.2;
    const LinkCoupling coupling = hand_coupling(v, {0.01, 0.04});
    const Allocation alloc{{0.5, 0.5}};
    const ReuseCoupling reuse = reuse_coupling(scn, alloc);
    const Vec sinr = sinr_flex(coupling, reuse, alloc, {1.0, 1.0});
    CHECK(sinr[0] == 1.0 / 0.01);
    CHECK(sinr[1] == 1.0 / 0.04);
  }

  SECTION("raising an interferer's power never helps a victim") {
    const Scenario scn = testutil::two_cell_scenario();
    const LinkCoupling coupling = testutil::coupling_for(scn, 33);
    const Allocation alloc{{0.4, 0.3, 0.5, 0.2}};
    const ReuseCoupling reuse = reuse_coupling(scn, alloc);
    Vec p = per_mru_powers(scn);
    const Vec base = sinr_flex(coupling, reuse, alloc, p);
    for (int l = 0; l < 4; ++l) {
      Vec boosted = p;
      boosted[l] *= 10.0;
      const Vec sinr = sinr_flex(coupling, reuse, alloc, boosted);
      for (int s = 0; s < 4; ++s) {
        if (s != l) REQUIRE(sinr[s] <= base[s]);
      }
    }
  }
}

TEST_CASE("throughput scales bits with allocation and capacity", "[interference]") {
  const MruGrid grid;

  SECTION("no allocation carries no bits") {
    const Vec eta = throughput(grid, Allocation{{0.0}}, {5.0});
    CHECK(eta[0] == 0.0);
  }

  SECTION("unit SINR over the whole plane") {
    const Vec eta = throughput(grid, Allocation{{1.0}}, {1.0});
    CHECK_THAT(eta[0], WithinRel(45000.0, 1e-12));
  }

  SECTION("linear in the allocated fraction") {
    const Vec once = throughput(grid, Allocation{{0.25}}, {3.7});
    const Vec twice = throughput(grid, Allocation{{0.5}}, {3.7});
    CHECK(twice[0] == 2.0 * once[0]);
  }
}

TEST_CASE("worst-case satisfaction tracks the weakest service", "[interference]") {
  const MruGrid grid;

  SECTION("meeting the demand exactly gives one") {
    const Vec eta = throughput(grid, Allocation{{0.5}}, {1.0});
    const QosResult q = qos(grid, Allocation{{0.5}}, {1.0}, {eta[0]});
    CHECK(q.rho_per_service[0] == 1.0);
    CHECK(q.rho == 1.0);
  }

  SECTION("the minimum wins") {
    const Allocation alloc{{0.2, 0.2, 0.2}};
    const Vec sinr = {3.0, 1.0, 15.0};
    const Vec eta = throughput(grid, alloc, sinr);
    const QosResult q = qos(grid, alloc, sinr, {eta[0] / 2.0, eta[1] / 1.2, eta[2] / 3.4});
    CHECK(q.rho == *std::min_element(q.rho_per_service.begin(), q.rho_per_service.end()));
    CHECK_THAT(q.rho, WithinRel(1.2, 1e-12));
    CHECK_THAT(q.rho_per_service[0], WithinRel(2.0, 1e-12));
    CHECK_THAT(q.rho_per_service[2], WithinRel(3.4, 1e-12));
  }

  SECTION("demand of half the plane capacity doubles satisfaction") {
    const QosResult q = qos(grid, Allocation{{1.0}}, {1.0}, {22500.0});
    CHECK_THAT(q.rho, WithinRel(2.0, 1e-12));
  }

  SECTION("nonpositive demand is rejected") {
    CHECK_THROWS_AS(qos(grid, Allocation{{0.5}}, {1.0}, {0.0}), std::invalid_argument);
  }
}

TEST_CASE("utility is invariant to service relabeling", "[interference]") {
  const Scenario scn = testutil::two_cell_scenario(20000.0, 5000.0, 10000.0, 15000.0);
  // Reverse the service order; nodes and geometry stay put.
  Scenario reversed = scn;
  std::reverse(reversed.services.begin(), reversed.services.end());
  for (int j = 0; j < 4; ++j) reversed.services[j].id = j + 1;
  derive_associations(reversed);

  ChannelParams params;
  params.seed = 17;
  const ChannelMatrix chan = build_channel(scn, params);
  const ChannelMatrix chan_rev = build_channel(reversed, params);
  REQUIRE(chan.h == chan_rev.h);  // gains depend on geometry only

  const LinkCoupling coupling = build_coupling(scn, chan, params, InterferenceFlags{});
  const LinkCoupling coupling_rev = build_coupling(reversed, chan_rev, params, InterferenceFlags{});

  const Allocation alloc{{0.4, 0.3, 0.2, 0.5}};
  Allocation alloc_rev{Vec(alloc.w.rbegin(), alloc.w.rend())};
  const Vec p = per_mru_powers(scn);
  const Vec p_rev = per_mru_powers(reversed);

  const QosResult q = qos(scn.grid, alloc,
                          sinr_flex(coupling, reuse_coupling(scn, alloc), alloc, p),
                          demand_vector(scn));
  const QosResult q_rev =
      qos(reversed.grid, alloc_rev,
          sinr_flex(coupling_rev, reuse_coupling(reversed, alloc_rev), alloc_rev, p_rev),
          demand_vector(reversed));
  CHECK_THAT(q_rev.rho, WithinRel(q.rho, 1e-12));
}

TEST_CASE("interferer score totals the generated interference", "[interference]") {
  Mat v(2, 2);
  v(0, 1) = 0.1;
  const LinkCoupling coupling = hand_coupling(v, {0.01, 0.01});
  ReuseCoupling ones;
  ones.c = Mat(2, 2, 1.0);

  SECTION("idle services generate nothing") {
    CHECK(interferer_score(coupling, ones, Allocation{{0.0, 0.5}}, {1.0, 1.0}, 0) == 0.0);
  }

  SECTION("hand-evaluated row") {
    CHECK(interferer_score(coupling, ones, Allocation{{0.5, 0.5}}, {1.0, 1.0}, 0) == 0.05);
  }

  SECTION("an isolated link generates nothing") {
    Mat zero_row(2, 2);
    zero_row(1, 0) = 0.7;
    const LinkCoupling isolated = hand_coupling(zero_row, {0.01, 0.01});
    CHECK(interferer_score(isolated, ones, Allocation{{0.9, 0.5}}, {1.0, 1.0}, 0) == 0.0);
  }
}

TEST_CASE("per-cell impact partitions the interferer score", "[interference]") {
  const Scenario scn = testutil::two_cell_scenario();
  const LinkCoupling coupling = testutil::coupling_for(scn, 41);
  const Vec p = per_mru_powers(scn);
  const Allocation alloc{{0.4, 0.3, 0.2, 0.5}};
  const ReuseCoupling reuse = reuse_coupling(scn, alloc);

  SECTION("cells partition the victims") {
    for (int s = 0; s < 4; ++s) {
      const Vec impacts = cell_impact(scn, coupling, reuse, alloc, p, s);
      const double total = impacts[0] + impacts[1];
      const double score = interferer_score(coupling, reuse, alloc, p, s);
      if (score == 0.0) {
        CHECK(total == 0.0);
      } else {
        CHECK_THAT(total, WithinRel(score, 1e-12));
      }
    }
  }

  SECTION("single victim in the second cell") {
    std::vector<Point2> bs = {{0.0, 0.0}, {2000.0, 0.0}};
    std::vector<Point2> ue = {{500.0, 0.0}, {1500.0, 0.0}};
    std::vector<Service> services = {{1, 0, 0, Direction::UL, 1000.0, 0.1},
                                     {2, 1, 1, Direction::UL, 1000.0, 0.1}};
    const Scenario pair = make_scenario(bs, ue, services, MruGrid{});
    Mat v(2, 2);
    v(0, 1) = 0.1;
    const LinkCoupling hand = hand_coupling(v, {0.01, 0.01});
    const ReuseCoupling reuse_pair = reuse_coupling(pair, Allocation{{0.5, 0.5}});
    REQUIRE(reuse_pair.c(0, 1) == 1.0);  // same mode, equal loads
    const Vec impacts = cell_impact(pair, hand, reuse_pair, Allocation{{0.5, 0.5}}, {1.0, 1.0}, 0);
    CHECK(impacts[1] == 0.05);
    CHECK(impacts[0] == 0.0);
  }

  SECTION("idle services impact nothing") {
    const Allocation idle{{0.0, 0.3, 0.2, 0.5}};
    const Vec impacts = cell_impact(scn, coupling, reuse_coupling(scn, idle), idle, p, 0);
    CHECK(impacts[0] == 0.0);
    CHECK(impacts[1] == 0.0);
  }
}

TEST_CASE("muting set collects strongly impacted foreign cells", "[interference]") {
  SECTION("a zero threshold takes every other cell") {
    CHECK(muting_set({0.3, 0.1, 0.2}, 0, 0.0) == std::vector<int>{1, 2});
  }

  SECTION("impacts below the threshold select nothing") {
    CHECK(muting_set({0.9, 0.05}, 0, 0.1).empty());
  }

  SECTION("the threshold boundary is inclusive") {
    CHECK(muting_set({0.9, 0.05}, 0, 0.05) == std::vector<int>{1});
  }
}
