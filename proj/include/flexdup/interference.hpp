#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "flexdup/channel.hpp"
#include "flexdup/linalg.hpp"
#include "flexdup/scenario.hpp"

namespace flexdup {

/// Load-dependent resource-overlap factors, entries in [0,1].
struct ReuseCoupling {
  Mat c;
};

/// Overlap factor between an interferer slot and a victim slot on a grid of
/// w total units, with loads given as unit counts u = nu * w. Opposite modes
/// fill the plane from opposite ends, so they overlap only in the excess
/// over the plane; same modes fill from the same end, so the smaller load is
/// fully covered. Unit counts rather than fractions keep the cross-mode case
/// exact when the loads are integer multiples of 1/w.
inline double overlap_factor(double u_interferer, double u_victim, double w, bool same_mode) {
  if (u_victim == 0.0) return 0.0;
  if (same_mode) return std::min(1.0, u_interferer / u_victim);
  return std::max(0.0, u_interferer + u_victim - w) / u_victim;
}

inline ReuseCoupling reuse_coupling(const Scenario& scn, const Allocation& alloc) {
  const CellLoads loads = cell_loads(scn, alloc);
  const int s = scn.num_services();
  const double w = static_cast<double>(scn.grid.total_units());

  // Per-cell per-mode loads in units.
  const int n = scn.num_bs();
  Vec units_ul(n), units_dl(n);
  for (int m = 0; m < n; ++m) {
    units_ul[m] = loads.nu_ul[m] * w;
    units_dl[m] = loads.nu_dl[m] * w;
  }
  auto units_of = [&](const Service& svc) {
    return svc.direction == Direction::UL ? units_ul[svc.bs] : units_dl[svc.bs];
  };

  ReuseCoupling reuse;
  reuse.c = Mat(s, s);
  for (int j = 0; j < s; ++j) {
    const Service& victim = scn.services[j];
    const double uv = units_of(victim);
    for (int l = 0; l < s; ++l) {
      const Service& interferer = scn.services[l];
      reuse.c(l, j) = overlap_factor(units_of(interferer), uv, w,
                                     interferer.direction == victim.direction);
    }
  }
  return reuse;
}

/// SINR under random-position slot occupation: w_l acts as the collision
/// probability of interferer l.
inline Vec sinr_legacy(const LinkCoupling& coupling, const Allocation& alloc, const Vec& p) {
  const std::size_t s = coupling.sigma_tilde.size();
  Vec sinr(s);
  for (std::size_t j = 0; j < s; ++j) {
    double denom = coupling.sigma_tilde[j];
    for (std::size_t l = 0; l < s; ++l) {
      denom += coupling.v_tilde(l, j) * alloc.w[l] * p[l];
    }
    sinr[j] = p[j] / denom;
  }
  return sinr;
}

/// SINR under ordered slot placement: interference weighted entrywise by the
/// overlap factors.
inline Vec sinr_flex(const LinkCoupling& coupling, const ReuseCoupling& reuse,
                     const Allocation& alloc, const Vec& p) {
  const std::size_t s = coupling.sigma_tilde.size();
  Vec sinr(s);
  for (std::size_t j = 0; j < s; ++j) {
    double denom = coupling.sigma_tilde[j];
    for (std::size_t l = 0; l < s; ++l) {
      denom += reuse.c(l, j) * coupling.v_tilde(l, j) * p[l] * alloc.w[l];
    }
    sinr[j] = p[j] / denom;
  }
  return sinr;
}

inline double capacity_bits_per_unit(double sinr) { return std::log1p(sinr) / M_LN2; }

/// Achievable bits per service over the whole plane span.
inline Vec throughput(const MruGrid& grid, const Allocation& alloc, const Vec& sinr) {
  const double plane = grid.plane_hz_s();
  Vec eta(sinr.size());
  for (std::size_t j = 0; j < sinr.size(); ++j) {
    eta[j] = plane * alloc.w[j] * capacity_bits_per_unit(sinr[j]);
  }
  return eta;
}

struct QosResult {
  Vec rho_per_service;
  double rho = 0.0;  // worst case over services
};

inline QosResult qos(const MruGrid& grid, const Allocation& alloc, const Vec& sinr,
                     const Vec& demands) {
  const Vec eta = throughput(grid, alloc, sinr);
  QosResult result;
  result.rho_per_service.resize(eta.size());
  for (std::size_t j = 0; j < eta.size(); ++j) {
    if (!(demands[j] > 0.0)) throw std::invalid_argument("qos: nonpositive demand");
    result.rho_per_service[j] = eta[j] / demands[j];
  }
  result.rho = *std::min_element(result.rho_per_service.begin(), result.rho_per_service.end());
  return result;
}

/// Total interference service s injects into the network at the current
/// allocation.
inline double interferer_score(const LinkCoupling& coupling, const ReuseCoupling& reuse,
                               const Allocation& alloc, const Vec& p, int s) {
  double row_sum = 0.0;
  for (std::size_t t = 0; t < coupling.sigma_tilde.size(); ++t) {
    row_sum += reuse.c(s, t) * coupling.v_tilde(s, t);
  }
  return row_sum * p[s] * alloc.w[s];
}

/// Interference from service s received per cell, grouped over that cell's
/// services. Summing the result over all cells gives interferer_score(s).
inline Vec cell_impact(const Scenario& scn, const LinkCoupling& coupling,
                       const ReuseCoupling& reuse, const Allocation& alloc, const Vec& p, int s) {
  Vec impact(scn.num_bs(), 0.0);
  for (int t = 0; t < scn.num_services(); ++t) {
    impact[scn.services[t].bs] += reuse.c(s, t) * coupling.v_tilde(s, t);
  }
  const double scale = p[s] * alloc.w[s];
  for (double& x : impact) x *= scale;
  return impact;
}

/// Cells other than the service's own whose received impact reaches the
/// threshold (boundary inclusive).
inline std::vector<int> muting_set(const Vec& impacts, int own_cell, double alpha) {
  std::vector<int> cells;
  for (int m = 0; m < static_cast<int>(impacts.size()); ++m) {
    if (m != own_cell && impacts[m] >= alpha) cells.push_back(m);
  }
  return cells;
}

}  // namespace flexdup
