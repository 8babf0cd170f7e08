#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexdup/linalg.hpp"

namespace flexdup {

enum class Direction { UL, DL };

inline const char* to_string(Direction d) { return d == Direction::UL ? "UL" : "DL"; }

/// Minimum-resource-unit grid: the resource plane is w_t x w_f units of
/// delta_t seconds by delta_f Hz each.
struct MruGrid {
  double delta_t_s = 0.5e-3;
  double delta_f_hz = 15e3;
  int w_t = 20;
  int w_f = 300;

  int total_units() const { return w_t * w_f; }
  /// Hz*s carried by one unit.
  double unit_hz_s() const { return delta_t_s * delta_f_hz; }
  /// Scale factor between spectral efficiency and bits over the whole plane.
  double plane_hz_s() const { return unit_hz_s() * static_cast<double>(total_units()); }
};

/// One UL or DL traffic flow between a UE and its serving BS.
struct Service {
  int id = 0;        // 1..S
  int ue = 0;        // position in Scenario::ue_positions
  int bs = 0;        // serving BS, position in Scenario::bs_positions
  Direction direction = Direction::UL;
  double demand_bits = 0.0;     // bits required over the w_t*delta_t span
  double tx_power_watt = 0.0;   // UE power for UL, BS power for DL
};

struct Allocation {
  Vec w;  // per-service fraction of the resource plane, >= 0
};

using Point2 = std::array<double, 2>;

/// Network snapshot: geometry, services, grid, and the association
/// indicator matrices derived from the service list. Treat as immutable
/// after construction.
struct Scenario {
  std::vector<Point2> bs_positions;
  std::vector<Point2> ue_positions;
  std::vector<Service> services;
  MruGrid grid;

  Mat a;     // K x S, a(k,s)=1 iff service s belongs to UE k
  Mat b;     // N x S, b(n,s)=1 iff service s is served by BS n
  Mat b_ul;  // N x S, UL part of b
  Mat b_dl;  // N x S, DL part of b

  int num_bs() const { return static_cast<int>(bs_positions.size()); }
  int num_ue() const { return static_cast<int>(ue_positions.size()); }
  int num_services() const { return static_cast<int>(services.size()); }
};

inline void derive_associations(Scenario& scn) {
  const std::size_t n = scn.bs_positions.size();
  const std::size_t k = scn.ue_positions.size();
  const std::size_t s = scn.services.size();
  scn.a = Mat(k, s);
  scn.b = Mat(n, s);
  scn.b_ul = Mat(n, s);
  scn.b_dl = Mat(n, s);
  for (std::size_t j = 0; j < s; ++j) {
    const Service& svc = scn.services[j];
    if (svc.ue < 0 || static_cast<std::size_t>(svc.ue) >= k) {
      throw std::invalid_argument("service " + std::to_string(j) + ": UE index out of range");
    }
    if (svc.bs < 0 || static_cast<std::size_t>(svc.bs) >= n) {
      throw std::invalid_argument("service " + std::to_string(j) + ": BS index out of range");
    }
    scn.a(svc.ue, j) = 1.0;
    scn.b(svc.bs, j) = 1.0;
    (svc.direction == Direction::UL ? scn.b_ul : scn.b_dl)(svc.bs, j) = 1.0;
  }
}

inline Scenario make_scenario(std::vector<Point2> bs_positions, std::vector<Point2> ue_positions,
                              std::vector<Service> services, MruGrid grid) {
  Scenario scn;
  scn.bs_positions = std::move(bs_positions);
  scn.ue_positions = std::move(ue_positions);
  scn.services = std::move(services);
  scn.grid = grid;
  derive_associations(scn);
  return scn;
}

inline Vec demand_vector(const Scenario& scn) {
  Vec d(scn.num_services());
  for (int j = 0; j < scn.num_services(); ++j) d[j] = scn.services[j].demand_bits;
  return d;
}

struct CellLoads {
  Vec nu;     // total load per cell
  Vec nu_ul;  // UL load per cell
  Vec nu_dl;  // DL load per cell
};

/// Per-cell occupied resource fractions. nu = nu_ul + nu_dl holds exactly
/// because nu is formed from the two partial sums.
inline CellLoads cell_loads(const Scenario& scn, const Allocation& alloc) {
  if (alloc.w.size() != static_cast<std::size_t>(scn.num_services())) {
    throw std::invalid_argument("allocation length does not match service count");
  }
  const int n = scn.num_bs();
  CellLoads loads{Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0)};
  for (int j = 0; j < scn.num_services(); ++j) {
    const Service& svc = scn.services[j];
    (svc.direction == Direction::UL ? loads.nu_ul : loads.nu_dl)[svc.bs] += alloc.w[j];
  }
  for (int m = 0; m < n; ++m) loads.nu[m] = loads.nu_ul[m] + loads.nu_dl[m];
  return loads;
}

/// Per-cell (UL, DL) fractions of the total demand.
inline std::vector<std::array<double, 2>> traffic_fractions(const Scenario& scn) {
  double total = 0.0;
  for (const Service& svc : scn.services) total += svc.demand_bits;
  if (!(total > 0.0)) {
    throw std::invalid_argument("traffic fractions undefined for zero total demand");
  }
  std::vector<std::array<double, 2>> theta(scn.num_bs(), {0.0, 0.0});
  for (const Service& svc : scn.services) {
    theta[svc.bs][svc.direction == Direction::UL ? 0 : 1] += svc.demand_bits / total;
  }
  return theta;
}

/// Inter-cell traffic distance: p-norm (default Euclidean) of the difference
/// between two cells' (UL, DL) demand-fraction vectors. For more than two
/// cells, the maximum over BS pairs.
inline double traffic_distance(const Scenario& scn, double norm_p = 2.0) {
  if (scn.num_bs() < 2) {
    throw std::invalid_argument("traffic distance needs at least two cells");
  }
  if (!(norm_p >= 1.0)) {
    throw std::invalid_argument("traffic distance norm order must be >= 1");
  }
  const auto theta = traffic_fractions(scn);
  double best = 0.0;
  for (std::size_t m = 0; m < theta.size(); ++m) {
    for (std::size_t n = m + 1; n < theta.size(); ++n) {
      const double du = std::abs(theta[n][0] - theta[m][0]);
      const double dd = std::abs(theta[n][1] - theta[m][1]);
      const double dist = norm_p == 2.0
                              ? std::hypot(du, dd)
                              : std::pow(std::pow(du, norm_p) + std::pow(dd, norm_p), 1.0 / norm_p);
      best = std::max(best, dist);
    }
  }
  return best;
}

/// Collects every violated structural invariant; empty result means the
/// scenario is well formed. Association matrices are re-checked rather than
/// re-derived so hand-built or deserialized instances get caught too.
inline std::vector<std::string> validate(const Scenario& scn) {
  std::vector<std::string> errors;
  const auto n = static_cast<std::size_t>(scn.num_bs());
  const auto k = static_cast<std::size_t>(scn.num_ue());
  const auto s = static_cast<std::size_t>(scn.num_services());

  if (!(scn.grid.delta_t_s > 0.0)) errors.push_back("grid: delta_t must be positive");
  if (!(scn.grid.delta_f_hz > 0.0)) errors.push_back("grid: delta_f must be positive");
  if (scn.grid.w_t < 1) errors.push_back("grid: w_t must be >= 1");
  if (scn.grid.w_f < 1) errors.push_back("grid: w_f must be >= 1");

  auto check_point = [&errors](const Point2& p, const std::string& what) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
      errors.push_back(what + ": non-finite coordinates");
    }
  };
  for (std::size_t i = 0; i < n; ++i) check_point(scn.bs_positions[i], "bs " + std::to_string(i));
  for (std::size_t i = 0; i < k; ++i) check_point(scn.ue_positions[i], "ue " + std::to_string(i));

  for (std::size_t j = 0; j < s; ++j) {
    const Service& svc = scn.services[j];
    const std::string tag = "service " + std::to_string(j);
    if (svc.id != static_cast<int>(j) + 1) errors.push_back(tag + ": id must be " + std::to_string(j + 1));
    if (svc.ue < 0 || static_cast<std::size_t>(svc.ue) >= k) errors.push_back(tag + ": UE index out of range");
    if (svc.bs < 0 || static_cast<std::size_t>(svc.bs) >= n) errors.push_back(tag + ": BS index out of range");
    if (!(svc.demand_bits > 0.0)) errors.push_back(tag + ": nonpositive demand");
    if (!(svc.tx_power_watt > 0.0)) errors.push_back(tag + ": nonpositive power");
  }

  auto check_columns = [&errors, s](const Mat& m, const std::string& name) {
    if (m.cols() != s) {
      errors.push_back(name + ": wrong number of columns");
      return;
    }
    for (std::size_t j = 0; j < s; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) sum += m(i, j);
      if (sum != 1.0) {
        errors.push_back(sum > 1.0 ? name + ": multi-associated service " + std::to_string(j)
                                   : name + ": unassociated service " + std::to_string(j));
      }
    }
  };
  if (scn.a.rows() != k) {
    errors.push_back("A: wrong number of rows");
  } else {
    check_columns(scn.a, "A");
  }
  if (scn.b.rows() != n) {
    errors.push_back("B: wrong number of rows");
  } else {
    check_columns(scn.b, "B");
  }

  if (scn.b_ul.rows() == n && scn.b_dl.rows() == n && scn.b.rows() == n &&
      scn.b_ul.cols() == s && scn.b_dl.cols() == s && scn.b.cols() == s) {
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t j = 0; j < s; ++j) {
        if (scn.b(m, j) != scn.b_ul(m, j) + scn.b_dl(m, j)) {
          errors.push_back("B split: B != B_ul + B_dl at (" + std::to_string(m) + "," + std::to_string(j) + ")");
        }
        if (scn.b_ul(m, j) != 0.0 && scn.b_dl(m, j) != 0.0) {
          errors.push_back("B split: overlapping UL/DL support at (" + std::to_string(m) + "," + std::to_string(j) + ")");
        }
      }
    }
    for (std::size_t j = 0; j < s; ++j) {
      const Service& svc = scn.services[j];
      if (svc.bs >= 0 && static_cast<std::size_t>(svc.bs) < n && scn.b(svc.bs, j) != 1.0) {
        errors.push_back("B: entry inconsistent with service " + std::to_string(j));
      }
    }
  } else {
    errors.push_back("B split: wrong dimensions");
  }

  return errors;
}

}  // namespace flexdup
