#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "flexdup/linalg.hpp"
#include "flexdup/rng.hpp"
#include "flexdup/scenario.hpp"

namespace flexdup {

/// Distance-based pathloss in dB plus lognormal shadowing, one instance per
/// link class.
struct PathlossModel {
  double intercept_db = 0.0;
  double slope_db_per_decade = 0.0;  // over distance in km
  double shadow_stddev_db = 0.0;

  double mean_db(double d_km) const { return intercept_db + slope_db_per_decade * std::log10(d_km); }
};

struct ChannelParams {
  PathlossModel bs_to_ue{128.1, 37.6, 8.0};
  PathlossModel ue_to_bs{128.1, 37.6, 8.0};
  PathlossModel bs_to_bs{98.4, 40.0, 8.0};
  PathlossModel ue_to_ue{147.4, 43.3, 10.0};
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_bs_db = 5.0;
  double noise_figure_ue_db = 9.0;
  double min_coupling_loss_db = 70.0;
  std::uint64_t seed = 0;
};

/// Average linear gains between all nodes. Nodes 0..N-1 are BSs,
/// N..N+K-1 are UEs. Symmetric by construction (reciprocity).
struct ChannelMatrix {
  Mat h;
  int num_bs = 0;
};

struct InterferenceFlags {
  bool self_cancellation = true;
  bool zero_intra_cell = true;
};

/// Normalized interference couplings: v_tilde(l,s) is the gain from the
/// transmitter of service l to the receiver of service s, divided by
/// service s's own link gain; sigma_tilde(s) is noise power normalized the
/// same way.
struct LinkCoupling {
  Mat v_tilde;
  Vec sigma_tilde;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Power of one service on one resource unit: the transmit power spread
/// uniformly over the frequency units.
inline double per_mru_power(const Service& svc, const MruGrid& grid) {
  return svc.tx_power_watt / static_cast<double>(grid.w_f);
}

inline Vec per_mru_powers(const Scenario& scn) {
  Vec p(scn.num_services());
  for (int j = 0; j < scn.num_services(); ++j) p[j] = per_mru_power(scn.services[j], scn.grid);
  return p;
}

/// Node index of a service's transmitter within a ChannelMatrix.
inline int tx_node(const Service& svc, int num_bs) {
  return svc.direction == Direction::UL ? num_bs + svc.ue : svc.bs;
}

/// Node index of a service's receiver within a ChannelMatrix.
inline int rx_node(const Service& svc, int num_bs) {
  return svc.direction == Direction::UL ? svc.bs : num_bs + svc.ue;
}

inline ChannelMatrix build_channel(const Scenario& scn, const ChannelParams& params) {
  const int n = scn.num_bs();
  const int k = scn.num_ue();
  const int t = n + k;

  auto position = [&](int node) -> const Point2& {
    return node < n ? scn.bs_positions[node] : scn.ue_positions[node - n];
  };
  auto model_for = [&](int from, int to) -> const PathlossModel& {
    const bool from_bs = from < n;
    const bool to_bs = to < n;
    if (from_bs && to_bs) return params.bs_to_bs;
    if (!from_bs && !to_bs) return params.ue_to_ue;
    return from_bs ? params.bs_to_ue : params.ue_to_bs;
  };

  auto engine = make_engine(params.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  ChannelMatrix chan;
  chan.num_bs = n;
  chan.h = Mat(t, t);
  // One shadowing draw per unordered node pair; h is symmetric.
  for (int i = 0; i < t; ++i) {
    for (int j = i; j < t; ++j) {
      const PathlossModel& model = model_for(i, j);
      const Point2& pi = position(i);
      const Point2& pj = position(j);
      double d_km = std::hypot(pj[0] - pi[0], pj[1] - pi[1]) / 1000.0;
      d_km = std::max(d_km, 1e-3);
      double pl_db = model.mean_db(d_km);
      if (model.shadow_stddev_db > 0.0) pl_db += model.shadow_stddev_db * unit_normal(engine);
      pl_db = std::max(pl_db, params.min_coupling_loss_db);
      const double gain = std::pow(10.0, -pl_db / 10.0);
      chan.h(i, j) = gain;
      chan.h(j, i) = gain;
    }
  }
  return chan;
}

inline LinkCoupling build_coupling(const Scenario& scn, const ChannelMatrix& chan,
                                   const ChannelParams& params, const InterferenceFlags& flags) {
  const int s = scn.num_services();
  const int n = chan.num_bs;
  LinkCoupling coupling;
  coupling.v_tilde = Mat(s, s);
  coupling.sigma_tilde = Vec(s);

  const double noise_psd_w = dbm_to_watt(params.noise_psd_dbm_hz);
  for (int j = 0; j < s; ++j) {
    const Service& svc = scn.services[j];
    const double own_gain = chan.h(tx_node(svc, n), rx_node(svc, n));
    if (!(own_gain > 0.0)) {
      throw std::invalid_argument("service " + std::to_string(j) + ": nonpositive own link gain");
    }
    const double nf_db =
        svc.direction == Direction::UL ? params.noise_figure_bs_db : params.noise_figure_ue_db;
    const double noise_w = noise_psd_w * scn.grid.delta_f_hz * db_to_linear(nf_db);
    coupling.sigma_tilde[j] = noise_w / own_gain;

    for (int l = 0; l < s; ++l) {
      if (flags.self_cancellation && l == j) continue;
      if (flags.zero_intra_cell && scn.services[l].bs == svc.bs) continue;
      coupling.v_tilde(l, j) = chan.h(tx_node(scn.services[l], n), rx_node(svc, n)) / own_gain;
    }
  }
  return coupling;
}

inline std::string channel_to_csv(const ChannelMatrix& chan) {
  std::ostringstream out;
  char buf[32];
  for (std::size_t i = 0; i < chan.h.rows(); ++i) {
    for (std::size_t j = 0; j < chan.h.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", chan.h(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace flexdup
