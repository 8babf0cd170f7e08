#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "flexdup/baselines.hpp"
#include "flexdup/channel.hpp"
#include "flexdup/interference.hpp"
#include "flexdup/linalg.hpp"
#include "flexdup/rng.hpp"
#include "flexdup/scenario.hpp"
#include "flexdup/solvers.hpp"

namespace flexdup {

/// Integer split "first/second" of a whole into two shares.
struct TrafficRatio {
  int first = 5;
  int second = 5;

  double first_fraction() const {
    return static_cast<double>(first) / static_cast<double>(first + second);
  }
  bool operator==(const TrafficRatio&) const = default;
};

inline std::string to_string(TrafficRatio r) {
  return std::to_string(r.first) + "/" + std::to_string(r.second);
}

inline TrafficRatio ratio_from_string(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("ratio must look like 5/5: " + text);
  TrafficRatio r{std::stoi(text.substr(0, slash)), std::stoi(text.substr(slash + 1))};
  if (r.first < 0 || r.second < 0 || r.first + r.second == 0) {
    throw std::invalid_argument("ratio shares must be nonnegative and not both zero: " + text);
  }
  return r;
}

/// Cell-1/cell-2 demand splits swept between the cells.
inline std::vector<TrafficRatio> default_inter_ratios() {
  std::vector<TrafficRatio> set;
  for (int a = 1; a <= 9; ++a) set.push_back({a, 10 - a});
  set.push_back({10, 0});
  return set;
}

/// UL/DL demand splits swept within a cell.
inline std::vector<TrafficRatio> default_intra_ratios() {
  std::vector<TrafficRatio> set;
  for (int a = 1; a <= 9; ++a) set.push_back({a, 10 - a});
  return set;
}

enum class Protocol { FIX, DTDD, FP, SAFP, RMDI };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::FIX: return "fix";
    case Protocol::DTDD: return "dtdd";
    case Protocol::FP: return "fp";
    case Protocol::SAFP: return "safp";
    case Protocol::RMDI: return "rmdi";
  }
  return "?";
}

inline Protocol protocol_from_string(const std::string& name) {
  if (name == "fix") return Protocol::FIX;
  if (name == "dtdd") return Protocol::DTDD;
  if (name == "fp") return Protocol::FP;
  if (name == "safp") return Protocol::SAFP;
  if (name == "rmdi") return Protocol::RMDI;
  throw std::invalid_argument("unknown protocol: " + name);
}

inline std::vector<Protocol> all_protocols() {
  return {Protocol::FIX, Protocol::DTDD, Protocol::FP, Protocol::SAFP, Protocol::RMDI};
}

struct SweepConfig {
  int runs = 50;  // per ratio combination
  std::vector<TrafficRatio> inter = default_inter_ratios();
  std::vector<TrafficRatio> intra = default_intra_ratios();
  double total_demand_bits = 50e3;
  double bs_spacing_m = 2000.0;
  double bs_power_dbm = 43.0;
  double ue_power_dbm = 22.0;
  MruGrid grid;
  ChannelParams channel;
  InterferenceFlags flags;
  SolverConfig solver;
  std::vector<Protocol> protocols = all_protocols();
  Vec bin_edges = {0.0, 0.16, 0.32, 0.48, 0.64, 0.80, 1.0};
  double distance_split = 0.5;  // low/high asymmetry classes
  double distance_norm_p = 2.0;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 picks the hardware concurrency
};

inline std::vector<std::string> validate(const SweepConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.runs < 1) errors.push_back("runs must be >= 1");
  if (!(cfg.total_demand_bits > 0.0)) errors.push_back("total demand must be positive");
  if (!(cfg.bs_spacing_m > 0.0)) errors.push_back("BS spacing must be positive");
  if (cfg.inter.empty()) errors.push_back("inter-cell ratio set is empty");
  if (cfg.intra.empty()) errors.push_back("intra-cell ratio set is empty");
  if (cfg.protocols.empty()) errors.push_back("protocol list is empty");
  if (cfg.bin_edges.size() < 2 || cfg.bin_edges.front() != 0.0) {
    errors.push_back("distance bins must start at 0 and have at least one bin");
  }
  for (std::size_t i = 1; i < cfg.bin_edges.size(); ++i) {
    if (!(cfg.bin_edges[i] > cfg.bin_edges[i - 1])) {
      errors.push_back("distance bin edges must increase");
      break;
    }
  }
  if (!(cfg.distance_split > 0.0)) errors.push_back("distance split must be positive");
  if (cfg.threads < 0) errors.push_back("threads must be >= 0");
  return errors;
}

namespace detail {

/// Uniform point in the intersection of two equal disks of radius equal to
/// the BS spacing, centered at the two BSs.
inline Point2 sample_lens(double spacing, std::mt19937_64& engine) {
  const double r = spacing;
  const double x_lo = spacing - r;
  const double x_hi = r;
  const double y_max = std::sqrt(r * r - 0.25 * spacing * spacing);
  std::uniform_real_distribution<double> ux(x_lo, x_hi);
  std::uniform_real_distribution<double> uy(-y_max, y_max);
  while (true) {
    const double x = ux(engine);
    const double y = uy(engine);
    if (std::hypot(x, y) <= r && std::hypot(x - spacing, y) <= r) return {x, y};
  }
}

}  // namespace detail

/// Two-cell snapshot for one Monte-Carlo run: demands split per the ratios,
/// one UL and one DL service per cell, each with its own uniformly placed
/// UE; zero-demand services are dropped together with their UEs.
inline Scenario generate_scenario(const SweepConfig& cfg, TrafficRatio inter, TrafficRatio intra1,
                                  TrafficRatio intra2, std::uint64_t run_seed) {
  const double cell_demand[2] = {cfg.total_demand_bits * inter.first_fraction(),
                                 cfg.total_demand_bits * (1.0 - inter.first_fraction())};
  const TrafficRatio intra[2] = {intra1, intra2};

  std::vector<Point2> bs = {{0.0, 0.0}, {cfg.bs_spacing_m, 0.0}};
  std::vector<Point2> ues;
  std::vector<Service> services;
  auto engine = make_engine(derive_seed(run_seed, 0));

  for (int cell = 0; cell < 2; ++cell) {
    const double ul_demand = cell_demand[cell] * intra[cell].first_fraction();
    const double demands[2] = {ul_demand, cell_demand[cell] - ul_demand};
    const Direction dirs[2] = {Direction::UL, Direction::DL};
    for (int mode = 0; mode < 2; ++mode) {
      if (!(demands[mode] > 0.0)) continue;
      Service svc;
      svc.id = static_cast<int>(services.size()) + 1;
      svc.ue = static_cast<int>(ues.size());
      svc.bs = cell;
      svc.direction = dirs[mode];
      svc.demand_bits = demands[mode];
      svc.tx_power_watt =
          dbm_to_watt(dirs[mode] == Direction::UL ? cfg.ue_power_dbm : cfg.bs_power_dbm);
      ues.push_back(detail::sample_lens(cfg.bs_spacing_m, engine));
      services.push_back(svc);
    }
  }
  return make_scenario(std::move(bs), std::move(ues), std::move(services), cfg.grid);
}

struct RunRecord {
  Protocol protocol = Protocol::FIX;
  TrafficRatio inter, intra1, intra2;
  int run = 0;
  double distance = 0.0;
  double rho = 0.0;
  bool converged = false;
};

/// CDF samples and outage for one asymmetry class.
struct ClassAggregate {
  std::size_t count = 0;
  double outage = 0.0;
  Vec rho_sorted;
};

struct BinAggregate {
  std::size_t count = 0;
  double mean_rho = 0.0;
};

struct ProtocolAggregate {
  std::size_t count = 0;
  double outage = 0.0;
  ClassAggregate low;   // distance <= split
  ClassAggregate high;  // distance > split
  std::vector<BinAggregate> bins;
};

struct SweepAggregates {
  Vec bin_edges;
  double distance_split = 0.5;
  std::map<std::string, ProtocolAggregate> per_protocol;
};

struct SweepResult {
  std::vector<RunRecord> records;
  SweepAggregates aggregates;
};

inline SolveOutcome solve_with(Protocol protocol, const Scenario& scn,
                               const LinkCoupling& coupling, const MruGrid& grid,
                               const SolverConfig& solver) {
  switch (protocol) {
    case Protocol::FIX: return solve_fix(scn, coupling, grid);
    case Protocol::DTDD: return solve_dtdd(scn, coupling, grid);
    case Protocol::FP: return solve_fp(scn, coupling, grid, solver);
    case Protocol::SAFP: return solve_safp(scn, coupling, grid, solver);
    case Protocol::RMDI: return solve_rmdi(scn, coupling, grid, solver);
  }
  throw std::logic_error("unhandled protocol");
}

/// Distance-bin index with values at or beyond the last edge folded into the
/// last bin (the asymmetry measure can exceed the nominal top edge).
inline std::size_t bin_index(const Vec& edges, double value) {
  const std::size_t bins = edges.size() - 1;
  if (value >= edges[bins - 1]) return bins - 1;
  std::size_t i = 0;
  while (i + 1 < bins && value >= edges[i + 1]) ++i;
  return i;
}

/// Deterministic fold over the records: per protocol, sorted CDF samples per
/// asymmetry class, outage rates, and per-bin mean utilities. Sorting makes
/// the result independent of record order.
inline SweepAggregates aggregate(const std::vector<RunRecord>& records, const Vec& bin_edges,
                                 double distance_split) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  SweepAggregates agg;
  agg.bin_edges = bin_edges;
  agg.distance_split = distance_split;
  const std::size_t bins = bin_edges.size() - 1;

  std::map<std::string, std::vector<const RunRecord*>> by_protocol;
  for (const RunRecord& rec : records) by_protocol[to_string(rec.protocol)].push_back(&rec);

  for (auto& [name, recs] : by_protocol) {
    ProtocolAggregate pa;
    pa.count = recs.size();
    pa.bins.resize(bins);
    std::vector<Vec> bin_values(bins);
    std::size_t outage_count = 0;
    for (const RunRecord* rec : recs) {
      (rec->distance <= distance_split ? pa.low : pa.high).rho_sorted.push_back(rec->rho);
      bin_values[bin_index(bin_edges, rec->distance)].push_back(rec->rho);
      if (rec->rho < 1.0) ++outage_count;
    }
    pa.outage = static_cast<double>(outage_count) / static_cast<double>(pa.count);
    for (ClassAggregate* cls : {&pa.low, &pa.high}) {
      std::sort(cls->rho_sorted.begin(), cls->rho_sorted.end());
      cls->count = cls->rho_sorted.size();
      if (cls->count > 0) {
        std::size_t below = 0;
        for (double rho : cls->rho_sorted) below += rho < 1.0 ? 1 : 0;
        cls->outage = static_cast<double>(below) / static_cast<double>(cls->count);
      }
    }
    for (std::size_t b = 0; b < bins; ++b) {
      Vec& values = bin_values[b];
      std::sort(values.begin(), values.end());
      pa.bins[b].count = values.size();
      if (!values.empty()) {
        double sum = 0.0;
        for (double rho : values) sum += rho;
        pa.bins[b].mean_rho = sum / static_cast<double>(values.size());
      }
    }
    agg.per_protocol.emplace(name, std::move(pa));
  }
  return agg;
}

/// Full Monte-Carlo sweep over the ratio grid. Each (combination, run) task
/// owns a preassigned slice of the record array, so the output is identical
/// regardless of thread count or scheduling.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  {
    const auto errors = validate(cfg);
    if (!errors.empty()) throw std::invalid_argument("sweep config: " + errors.front());
  }

  struct Combo {
    TrafficRatio inter, intra1, intra2;
  };
  std::vector<Combo> combos;
  for (const TrafficRatio& inter : cfg.inter) {
    for (const TrafficRatio& intra1 : cfg.intra) {
      for (const TrafficRatio& intra2 : cfg.intra) combos.push_back({inter, intra1, intra2});
    }
  }

  const std::size_t tasks = combos.size() * static_cast<std::size_t>(cfg.runs);
  const std::size_t protocols = cfg.protocols.size();
  SweepResult result;
  result.records.resize(tasks * protocols);

  std::atomic<std::size_t> next_task{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (true) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= tasks) return;
      try {
        const std::size_t combo_idx = task / static_cast<std::size_t>(cfg.runs);
        const int run = static_cast<int>(task % static_cast<std::size_t>(cfg.runs));
        const Combo& combo = combos[combo_idx];
        const std::uint64_t run_seed = derive_seed(derive_seed(cfg.seed, combo_idx),
                                                   static_cast<std::uint64_t>(run));

        const Scenario scn =
            generate_scenario(cfg, combo.inter, combo.intra1, combo.intra2, run_seed);
        ChannelParams channel = cfg.channel;
        channel.seed = derive_seed(run_seed, 1);
        const ChannelMatrix chan = build_channel(scn, channel);
        const LinkCoupling coupling = build_coupling(scn, chan, channel, cfg.flags);
        const double distance = traffic_distance(scn, cfg.distance_norm_p);

        SolverConfig solver = cfg.solver;
        solver.seed = derive_seed(run_seed, 2);
        solver.keep_trace = false;

        for (std::size_t p = 0; p < protocols; ++p) {
          const SolveOutcome outcome =
              solve_with(cfg.protocols[p], scn, coupling, scn.grid, solver);
          RunRecord& rec = result.records[task * protocols + p];
          rec.protocol = cfg.protocols[p];
          rec.inter = combo.inter;
          rec.intra1 = combo.intra1;
          rec.intra2 = combo.intra2;
          rec.run = run;
          rec.distance = distance;
          rec.rho = outcome.rho_star;
          rec.converged = outcome.converged;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  unsigned thread_count = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
  thread_count = std::min<unsigned>(thread_count, static_cast<unsigned>(tasks));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (unsigned t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  result.aggregates = aggregate(result.records, cfg.bin_edges, cfg.distance_split);
  return result;
}

}  // namespace flexdup
