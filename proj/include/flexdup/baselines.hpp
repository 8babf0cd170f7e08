#pragma once

#include <vector>

#include "flexdup/channel.hpp"
#include "flexdup/interference.hpp"
#include "flexdup/linalg.hpp"
#include "flexdup/scenario.hpp"
#include "flexdup/solvers.hpp"

namespace flexdup {

/// Static split: in every cell, UL services share the first half of the
/// plane and DL services the second half, each half divided proportionally
/// to demand and fully used when nonempty.
inline Allocation fix_allocation(const Scenario& scn) {
  const int n = scn.num_bs();
  Vec demand_sum_ul(n, 0.0), demand_sum_dl(n, 0.0);
  for (const Service& svc : scn.services) {
    (svc.direction == Direction::UL ? demand_sum_ul : demand_sum_dl)[svc.bs] += svc.demand_bits;
  }
  Allocation alloc{Vec(scn.num_services())};
  for (int j = 0; j < scn.num_services(); ++j) {
    const Service& svc = scn.services[j];
    const double half_sum =
        svc.direction == Direction::UL ? demand_sum_ul[svc.bs] : demand_sum_dl[svc.bs];
    alloc.w[j] = 0.5 * svc.demand_bits / half_sum;
  }
  return alloc;
}

/// Full occupation: each cell splits its whole plane proportionally to
/// demand, so every nonempty cell carries load exactly 1.
inline Allocation dtdd_allocation(const Scenario& scn) {
  const int n = scn.num_bs();
  Vec demand_sum(n, 0.0);
  for (const Service& svc : scn.services) demand_sum[svc.bs] += svc.demand_bits;
  Allocation alloc{Vec(scn.num_services())};
  for (int j = 0; j < scn.num_services(); ++j) {
    const Service& svc = scn.services[j];
    alloc.w[j] = svc.demand_bits / demand_sum[svc.bs];
  }
  return alloc;
}

namespace detail {

inline SolveOutcome evaluate_static(const Scenario& scn, const LinkCoupling& coupling,
                                    const MruGrid& grid, Allocation alloc,
                                    const ReuseCoupling& reuse) {
  const Vec p = per_mru_powers(scn);
  const Vec sinr = sinr_flex(coupling, reuse, alloc, p);
  const QosResult q = qos(grid, alloc, sinr, demand_vector(scn));
  SolveOutcome out;
  out.w_star = std::move(alloc);
  out.rho_star = q.rho;
  out.rho_per_service = q.rho_per_service;
  out.converged = true;
  out.restart_utilities = {q.rho};
  return out;
}

}  // namespace detail

/// Static orthogonal UL/DL halves. The halves are aligned across cells, so
/// opposite-mode services never overlap: their coupling entries are zeroed
/// by construction and same-mode entries follow the load-overlap rule.
inline SolveOutcome solve_fix(const Scenario& scn, const LinkCoupling& coupling,
                              const MruGrid& grid) {
  Allocation alloc = fix_allocation(scn);
  ReuseCoupling reuse = reuse_coupling(scn, alloc);
  for (int j = 0; j < scn.num_services(); ++j) {
    for (int l = 0; l < scn.num_services(); ++l) {
      if (scn.services[l].direction != scn.services[j].direction) reuse.c(l, j) = 0.0;
    }
  }
  return detail::evaluate_static(scn, coupling, grid, std::move(alloc), reuse);
}

/// Per-cell proportional split with full occupation, evaluated under the
/// ordered-placement interference model.
inline SolveOutcome solve_dtdd(const Scenario& scn, const LinkCoupling& coupling,
                               const MruGrid& grid) {
  Allocation alloc = dtdd_allocation(scn);
  const ReuseCoupling reuse = reuse_coupling(scn, alloc);
  return detail::evaluate_static(scn, coupling, grid, std::move(alloc), reuse);
}

}  // namespace flexdup
