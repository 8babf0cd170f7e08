#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flexdup/channel.hpp"
#include "flexdup/interference.hpp"
#include "flexdup/linalg.hpp"
#include "flexdup/rng.hpp"
#include "flexdup/scenario.hpp"

namespace flexdup {

struct SolverConfig {
  int n_max = 30;        // random restarts
  int n_iter = 1000;     // coupling-update iterations per restart
  double epsilon = 1e-4; // convergence threshold, infinity norm
  std::optional<double> alpha;  // muting threshold; data-relative default when unset
  std::uint64_t seed = 0;
  int inner_iter_cap = 10000;  // safety bound on each fixed-point loop
  bool keep_trace = true;      // retain per-iteration records in the outcome
};

/// Service index -> cells in which that service's resources are reserved
/// (muted). Services with empty cell sets are omitted.
using MutingMap = std::map<int, std::vector<int>>;

struct TraceEntry {
  int stage = 0;    // 0 for the base solve; muting stage for re-solves
  int restart = 0;  // 1-based restart index; 0 for single-start solves
  int outer = 0;    // 1-based coupling-update step within the restart
  double rho = 0.0;
  double delta_inf = 0.0;
};

struct SolveOutcome {
  Allocation w_star;
  double rho_star = 0.0;
  Vec rho_per_service;
  MutingMap muted;  // empty except for muting-based solves
  std::vector<TraceEntry> trace;
  bool converged = false;
  int restarts_used = 0;
  Vec restart_utilities;  // final utility of each restart of the base solve
};

/// Resource demand of each service expressed as a plane fraction given the
/// current interference state: f_s(w) = d_s / (plane * log2(1 + SINR_s(w))),
/// with SINR evaluated under the supplied fixed reuse coupling. With an
/// all-ones reuse matrix this is the probabilistic-collision model's map.
inline Vec f_map(const LinkCoupling& coupling, const ReuseCoupling& reuse_fixed,
                 const MruGrid& grid, const Vec& demands, const Vec& p, const Allocation& alloc) {
  const Vec sinr = sinr_flex(coupling, reuse_fixed, alloc, p);
  const double plane = grid.plane_hz_s();
  Vec f(sinr.size());
  for (std::size_t j = 0; j < sinr.size(); ++j) {
    if (!(sinr[j] > 0.0)) {
      throw std::invalid_argument("f map: zero SINR for service " + std::to_string(j));
    }
    f[j] = demands[j] / (plane * capacity_bits_per_unit(sinr[j]));
  }
  return f;
}

/// Load constraint: largest per-cell total load.
inline double g_norm(const Scenario& scn, const Allocation& alloc) {
  const CellLoads loads = cell_loads(scn, alloc);
  return loads.nu.empty() ? 0.0 : *std::max_element(loads.nu.begin(), loads.nu.end());
}

/// Load constraint with muting: each cell additionally reserves the
/// allocations of services muted in it. Equals g_norm for an empty map.
inline double g_muted(const Scenario& scn, const Allocation& alloc, const MutingMap& muted) {
  const CellLoads loads = cell_loads(scn, alloc);
  Vec total = loads.nu;
  for (const auto& [svc, cells] : muted) {
    if (svc < 0 || svc >= scn.num_services()) {
      throw std::invalid_argument("muting map: unknown service " + std::to_string(svc));
    }
    for (int m : cells) {
      if (m < 0 || m >= scn.num_bs()) {
        throw std::invalid_argument("muting map: unknown cell " + std::to_string(m));
      }
      total[m] += alloc.w[svc];
    }
  }
  return total.empty() ? 0.0 : *std::max_element(total.begin(), total.end());
}

struct InnerStep {
  double rho = 0.0;
  double delta_inf = 0.0;
};

struct FixedPointResult {
  Vec w;
  double rho = 0.0;
  std::vector<InnerStep> steps;
  bool converged = false;
  int iterations = 0;
};

/// Normalized fixed-point iteration w <- f(w)/g(f(w)) for a standard
/// interference function f and a monotone degree-1 homogeneous g. The start
/// is normalized to g(w) = 1, so every iterate stays on the constraint
/// boundary and the per-step utility min_s w_s/f_s(w) is nondecreasing.
/// Returns the last iterate whose successor moved less than epsilon, so
/// ||f(w)/g(f(w)) - w||_inf < epsilon holds for the result on convergence.
template <typename MapFn, typename NormFn>
FixedPointResult fixed_point_solve(MapFn&& f, NormFn&& g, double epsilon, int inner_iter_cap,
                                   Vec w) {
  if (w.empty()) throw std::invalid_argument("fixed point: empty start");
  const double g0 = g(w);
  if (!(g0 > 0.0)) throw std::invalid_argument("fixed point: start needs positive constraint value");
  for (double& x : w) x /= g0;

  FixedPointResult res;
  Vec fw(w.size());
  auto rho_of = [](const Vec& point, const Vec& fval) {
    double rho = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < point.size(); ++s) {
      if (!(fval[s] > 0.0)) throw std::invalid_argument("fixed point: map must stay positive");
      rho = std::min(rho, point[s] / fval[s]);
    }
    return rho;
  };

  for (int it = 1; it <= inner_iter_cap; ++it) {
    f(w, fw);
    const double rho = rho_of(w, fw);
    const double gamma = g(fw);
    if (!(gamma > 0.0)) throw std::invalid_argument("fixed point: constraint vanished");
    double delta = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) {
      const double next = fw[s] / gamma;
      delta = std::max(delta, std::abs(next - w[s]));
      fw[s] = next;
    }
    res.steps.push_back({rho, delta});
    res.iterations = it;
    if (delta < epsilon) {
      res.converged = true;
      res.rho = rho;
      res.w = std::move(w);
      return res;
    }
    std::swap(w, fw);
  }

  f(w, fw);
  res.rho = rho_of(w, fw);
  res.w = std::move(w);
  return res;
}

namespace detail {

/// Preassembled per-scenario state for the solvers: interference rows are
/// stored transposed and premultiplied by the interferer powers, so one f
/// evaluation is S dot products and S capacity terms with no allocation.
class FlexWorkspace {
 public:
  FlexWorkspace(const Scenario& scn, const LinkCoupling& coupling)
      : s_(scn.num_services()),
        n_(scn.num_bs()),
        units_total_(static_cast<double>(scn.grid.total_units())),
        plane_(scn.grid.plane_hz_s()),
        mt_(static_cast<std::size_t>(s_), static_cast<std::size_t>(s_)),
        at_(static_cast<std::size_t>(s_), static_cast<std::size_t>(s_)),
        sigma_(coupling.sigma_tilde),
        p_(s_),
        demands_(s_),
        cell_(s_),
        is_ul_(s_),
        acc_ul_(n_),
        acc_dl_(n_),
        total_(n_) {
    for (int j = 0; j < s_; ++j) {
      const Service& svc = scn.services[j];
      p_[j] = per_mru_power(svc, scn.grid);
      demands_[j] = svc.demand_bits;
      if (!(p_[j] > 0.0)) throw std::invalid_argument("solver: nonpositive service power");
      if (!(demands_[j] > 0.0)) throw std::invalid_argument("solver: nonpositive service demand");
      cell_[j] = svc.bs;
      is_ul_[j] = svc.direction == Direction::UL;
    }
    for (int j = 0; j < s_; ++j) {
      for (int l = 0; l < s_; ++l) mt_(j, l) = coupling.v_tilde(l, j) * p_[l];
    }
  }

  int size() const { return s_; }
  const Vec& power() const { return p_; }
  const Vec& demands() const { return demands_; }

  /// Freeze the reuse coupling at allocation w: at(j,l) = c(l,j) * mt(j,l).
  void set_reuse_at(const Vec& w) {
    accumulate_loads(w);
    for (int m = 0; m < n_; ++m) {
      acc_ul_[m] *= units_total_;
      acc_dl_[m] *= units_total_;
    }
    for (int j = 0; j < s_; ++j) {
      const double uv = units_of(j);
      for (int l = 0; l < s_; ++l) {
        at_(j, l) = overlap_factor(units_of(l), uv, units_total_, is_ul_[l] == is_ul_[j]) * mt_(j, l);
      }
    }
  }

  /// Freeze an all-ones reuse coupling (probabilistic-collision model).
  void set_reuse_ones() { at_ = mt_; }

  void eval_f(const Vec& w, Vec& out) const {
    for (int j = 0; j < s_; ++j) {
      double denom = sigma_[j];
      for (int l = 0; l < s_; ++l) denom += at_(j, l) * w[l];
      out[j] = demands_[j] / (plane_ * capacity_bits_per_unit(p_[j] / denom));
    }
  }

  void set_muting(const MutingMap& muted) {
    mute_pairs_.clear();
    for (const auto& [svc, cells] : muted) {
      if (svc < 0 || svc >= s_) throw std::invalid_argument("muting map: unknown service");
      for (int m : cells) {
        if (m < 0 || m >= n_) throw std::invalid_argument("muting map: unknown cell");
        mute_pairs_.emplace_back(svc, m);
      }
    }
  }

  double eval_g(const Vec& w) {
    accumulate_loads(w);
    for (int m = 0; m < n_; ++m) total_[m] = acc_ul_[m] + acc_dl_[m];
    for (const auto& [svc, m] : mute_pairs_) total_[m] += w[svc];
    double best = 0.0;
    for (int m = 0; m < n_; ++m) best = std::max(best, total_[m]);
    return best;
  }

  /// Utility min_s w_s/f_s(w) with the reuse coupling refreshed at w itself.
  double utility_at(const Vec& w, Vec& f_scratch) {
    set_reuse_at(w);
    eval_f(w, f_scratch);
    double rho = std::numeric_limits<double>::infinity();
    for (int j = 0; j < s_; ++j) rho = std::min(rho, w[j] / f_scratch[j]);
    return rho;
  }

 private:
  void accumulate_loads(const Vec& w) {
    std::fill(acc_ul_.begin(), acc_ul_.end(), 0.0);
    std::fill(acc_dl_.begin(), acc_dl_.end(), 0.0);
    for (int j = 0; j < s_; ++j) (is_ul_[j] ? acc_ul_ : acc_dl_)[cell_[j]] += w[j];
  }

  double units_of(int j) const { return is_ul_[j] ? acc_ul_[cell_[j]] : acc_dl_[cell_[j]]; }

  int s_;
  int n_;
  double units_total_;
  double plane_;
  Mat mt_;  // mt(j,l) = v_tilde(l,j) * p_l
  Mat at_;  // mt scaled by the frozen reuse coupling
  Vec sigma_;
  Vec p_;
  Vec demands_;
  std::vector<int> cell_;
  std::vector<char> is_ul_;
  Vec acc_ul_, acc_dl_, total_;
  std::vector<std::pair<int, int>> mute_pairs_;
};

/// Shared machinery for the alternating solves: n_max restarts, each
/// alternating a fixed-coupling solve with a coupling refresh until the
/// outer movement drops below epsilon. The muting map shapes the constraint;
/// utilities are always evaluated with the coupling refreshed at the final
/// point, so they are comparable across different constraints.
inline SolveOutcome alternating_solve(FlexWorkspace& ws, const SolverConfig& config,
                                      const MutingMap& muted, std::uint64_t seed_base, int stage) {
  const int s = ws.size();
  ws.set_muting(muted);

  SolveOutcome out;
  out.muted = muted;
  out.restarts_used = config.n_max;
  out.restart_utilities.reserve(config.n_max);
  out.rho_star = -std::numeric_limits<double>::infinity();

  Vec w_init(s), f_scratch(s);
  auto f_fn = [&ws](const Vec& w, Vec& fout) { ws.eval_f(w, fout); };
  auto g_fn = [&ws](const Vec& w) { return ws.eval_g(w); };

  for (int i = 1; i <= config.n_max; ++i) {
    auto engine = make_engine(derive_seed(seed_base, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& x : w_init) x = unit(engine);
    const double g0 = ws.eval_g(w_init);
    if (!(g0 > 0.0)) throw std::runtime_error("solver: degenerate random start");
    for (double& x : w_init) x /= g0;

    Vec w = w_init;
    bool inner_all_converged = true;
    double delta_outer = std::numeric_limits<double>::infinity();
    int j = 1;
    do {
      ws.set_reuse_at(w);
      FixedPointResult inner = fixed_point_solve(f_fn, g_fn, config.epsilon,
                                                 config.inner_iter_cap, w);
      inner_all_converged = inner_all_converged && inner.converged;
      delta_outer = inf_norm_diff(inner.w, w);
      if (config.keep_trace) {
        for (const InnerStep& step : inner.steps) {
          out.trace.push_back({stage, i, j, step.rho, step.delta_inf});
        }
      }
      w = std::move(inner.w);
      ++j;
    } while (j <= config.n_iter && delta_outer >= config.epsilon);

    const double rho = ws.utility_at(w, f_scratch);
    out.restart_utilities.push_back(rho);
    if (rho > out.rho_star) {
      out.rho_star = rho;
      out.w_star.w = w;
      out.converged = inner_all_converged && delta_outer < config.epsilon;
      out.rho_per_service.resize(s);
      for (int r = 0; r < s; ++r) out.rho_per_service[r] = w[r] / f_scratch[r];
    }
  }
  return out;
}

}  // namespace detail

/// Single fixed-point solve of the probabilistic-collision model, reported
/// under the ordered-placement model at its solution so utilities are
/// comparable across protocols. Deterministic; ignores restarts and seed.
inline SolveOutcome solve_fp(const Scenario& scn, const LinkCoupling& coupling,
                             const MruGrid& grid, const SolverConfig& config) {
  (void)grid;
  detail::FlexWorkspace ws(scn, coupling);
  ws.set_reuse_ones();
  auto f_fn = [&ws](const Vec& w, Vec& fout) { ws.eval_f(w, fout); };
  auto g_fn = [&ws](const Vec& w) { return ws.eval_g(w); };

  FixedPointResult res = fixed_point_solve(f_fn, g_fn, config.epsilon, config.inner_iter_cap,
                                           Vec(scn.num_services(), 1.0));
  SolveOutcome out;
  out.converged = res.converged;
  out.restarts_used = 1;
  if (config.keep_trace) {
    for (const InnerStep& step : res.steps) out.trace.push_back({0, 0, 1, step.rho, step.delta_inf});
  }
  Vec f_scratch(scn.num_services());
  out.rho_star = ws.utility_at(res.w, f_scratch);
  out.rho_per_service.resize(scn.num_services());
  for (int r = 0; r < scn.num_services(); ++r) out.rho_per_service[r] = res.w[r] / f_scratch[r];
  out.w_star.w = std::move(res.w);
  out.restart_utilities = {out.rho_star};
  return out;
}

/// Successive approximation around the fixed point: per restart, alternate
/// freezing the reuse coupling at the current point with solving the frozen
/// subproblem, and keep the best restart.
inline SolveOutcome solve_safp(const Scenario& scn, const LinkCoupling& coupling,
                               const MruGrid& grid, const SolverConfig& config) {
  (void)grid;
  detail::FlexWorkspace ws(scn, coupling);
  return detail::alternating_solve(ws, config, MutingMap{}, config.seed, 0);
}

/// Muting of dominant interferers on top of the alternating solve: services
/// are ranked once by the interference they generate at the base solution;
/// stage k reserves the top-k services' resources in every strongly impacted
/// cell and re-solves, rolling back on the first utility decrease. The
/// result never falls below the base solve's utility.
inline SolveOutcome solve_rmdi(const Scenario& scn, const LinkCoupling& coupling,
                               const MruGrid& grid, const SolverConfig& config) {
  (void)grid;
  detail::FlexWorkspace ws(scn, coupling);
  SolveOutcome incumbent = detail::alternating_solve(ws, config, MutingMap{}, config.seed, 0);

  const int s = scn.num_services();
  const Vec& p = ws.power();
  std::vector<TraceEntry> full_trace = std::move(incumbent.trace);
  const Vec base_utilities = incumbent.restart_utilities;
  int restarts_total = incumbent.restarts_used;

  const ReuseCoupling c0 = reuse_coupling(scn, incumbent.w_star);
  Vec scores(s);
  for (int j = 0; j < s; ++j) scores[j] = interferer_score(coupling, c0, incumbent.w_star, p, j);
  std::vector<int> order(s);
  for (int j = 0; j < s; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&scores](int a, int b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });

  double alpha;
  if (config.alpha.has_value()) {
    alpha = *config.alpha;
  } else {
    // Data-relative default: median positive cross-cell impact at the base
    // solution.
    std::vector<double> impacts_pool;
    for (int j = 0; j < s; ++j) {
      const Vec impacts = cell_impact(scn, coupling, c0, incumbent.w_star, p, j);
      for (int m = 0; m < scn.num_bs(); ++m) {
        if (m != scn.services[j].bs && impacts[m] > 0.0) impacts_pool.push_back(impacts[m]);
      }
    }
    if (impacts_pool.empty()) {
      alpha = std::numeric_limits<double>::infinity();
    } else {
      std::sort(impacts_pool.begin(), impacts_pool.end());
      const std::size_t h = impacts_pool.size() / 2;
      alpha = impacts_pool.size() % 2 == 1 ? impacts_pool[h]
                                           : 0.5 * (impacts_pool[h - 1] + impacts_pool[h]);
    }
  }

  for (int k = 1; k <= s; ++k) {
    const ReuseCoupling ck = reuse_coupling(scn, incumbent.w_star);
    MutingMap muted;
    for (int r = 0; r < k; ++r) {
      const int svc = order[r];
      const Vec impacts = cell_impact(scn, coupling, ck, incumbent.w_star, p, svc);
      std::vector<int> cells = muting_set(impacts, scn.services[svc].bs, alpha);
      if (!cells.empty()) muted[svc] = std::move(cells);
    }
    // An unchanged constraint cannot move the solution; skip the re-solve.
    if (muted == incumbent.muted) continue;

    SolveOutcome trial = detail::alternating_solve(
        ws, config, muted, derive_seed(config.seed, 1000000 + static_cast<std::uint64_t>(k)), k);
    restarts_total += trial.restarts_used;
    if (config.keep_trace) {
      full_trace.insert(full_trace.end(), trial.trace.begin(), trial.trace.end());
    }
    if (trial.rho_star < incumbent.rho_star) break;
    trial.trace.clear();
    incumbent = std::move(trial);
  }

  incumbent.trace = std::move(full_trace);
  incumbent.restart_utilities = base_utilities;
  incumbent.restarts_used = restarts_total;
  return incumbent;
}

}  // namespace flexdup
