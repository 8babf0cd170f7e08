#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "flexdup/channel.hpp"
#include "flexdup/harness.hpp"
#include "flexdup/scenario.hpp"
#include "flexdup/solvers.hpp"

namespace flexdup {

using Json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- scenario ----

inline Json scenario_to_json(const Scenario& scn) {
  Json j;
  j["schema"] = "scenario/1";
  j["grid"] = {{"delta_t_s", scn.grid.delta_t_s},
               {"delta_f_hz", scn.grid.delta_f_hz},
               {"w_t", scn.grid.w_t},
               {"w_f", scn.grid.w_f}};
  j["bs_positions"] = Json::array();
  for (const Point2& p : scn.bs_positions) j["bs_positions"].push_back({p[0], p[1]});
  j["ue_positions"] = Json::array();
  for (const Point2& p : scn.ue_positions) j["ue_positions"].push_back({p[0], p[1]});
  j["services"] = Json::array();
  for (const Service& svc : scn.services) {
    j["services"].push_back({{"id", svc.id},
                             {"ue", svc.ue},
                             {"bs", svc.bs},
                             {"direction", to_string(svc.direction)},
                             {"demand_bits", svc.demand_bits},
                             {"tx_power_watt", svc.tx_power_watt}});
  }
  return j;
}

/// Rebuilds the association matrices from the service list; they are derived
/// state and are not stored.
inline Scenario scenario_from_json(const Json& j) {
  MruGrid grid;
  if (j.contains("grid")) {
    const Json& g = j.at("grid");
    grid.delta_t_s = g.value("delta_t_s", grid.delta_t_s);
    grid.delta_f_hz = g.value("delta_f_hz", grid.delta_f_hz);
    grid.w_t = g.value("w_t", grid.w_t);
    grid.w_f = g.value("w_f", grid.w_f);
  }
  auto points = [](const Json& arr) {
    std::vector<Point2> out;
    for (const Json& p : arr) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return out;
  };
  std::vector<Service> services;
  for (const Json& js : j.at("services")) {
    Service svc;
    svc.id = js.at("id").get<int>();
    svc.ue = js.at("ue").get<int>();
    svc.bs = js.at("bs").get<int>();
    const std::string dir = js.at("direction").get<std::string>();
    if (dir != "UL" && dir != "DL") throw std::invalid_argument("direction must be UL or DL");
    svc.direction = dir == "UL" ? Direction::UL : Direction::DL;
    svc.demand_bits = js.at("demand_bits").get<double>();
    svc.tx_power_watt = js.at("tx_power_watt").get<double>();
    services.push_back(svc);
  }
  return make_scenario(points(j.at("bs_positions")), points(j.at("ue_positions")),
                       std::move(services), grid);
}

// ---- solve outcome ----

inline Json outcome_to_json(const SolveOutcome& outcome, const Scenario& scn,
                            bool include_trace) {
  Json j;
  j["schema"] = "outcome/1";
  j["rho"] = outcome.rho_star;
  j["rho_per_service"] = outcome.rho_per_service;
  j["w"] = outcome.w_star.w;
  j["converged"] = outcome.converged;
  j["restarts_used"] = outcome.restarts_used;
  j["restart_utilities"] = outcome.restart_utilities;
  j["muted"] = Json::array();
  for (const auto& [svc, cells] : outcome.muted) {
    j["muted"].push_back({{"service", scn.services[svc].id}, {"cells", cells}});
  }
  if (include_trace) {
    Json trace = Json::array();
    for (const TraceEntry& entry : outcome.trace) {
      trace.push_back({{"stage", entry.stage},
                       {"restart", entry.restart},
                       {"outer", entry.outer},
                       {"rho", entry.rho},
                       {"delta_inf", entry.delta_inf}});
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

// ---- records CSV ----

inline const char* records_csv_header() { return "protocol,inter,intra1,intra2,run,D,rho,converged"; }

inline std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::string out = records_csv_header();
  out += '\n';
  char buf[64];
  for (const RunRecord& rec : records) {
    out += to_string(rec.protocol);
    out += ',';
    out += to_string(rec.inter);
    out += ',';
    out += to_string(rec.intra1);
    out += ',';
    out += to_string(rec.intra2);
    out += ',';
    out += std::to_string(rec.run);
    out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", rec.distance);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", rec.rho);
    out += buf;
    out += ',';
    out += rec.converged ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::vector<RunRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != records_csv_header()) {
    throw std::invalid_argument("records CSV: bad or missing header");
  }
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw std::invalid_argument("records CSV: bad row: " + line);
    RunRecord rec;
    rec.protocol = protocol_from_string(fields[0]);
    rec.inter = ratio_from_string(fields[1]);
    rec.intra1 = ratio_from_string(fields[2]);
    rec.intra2 = ratio_from_string(fields[3]);
    rec.run = std::stoi(fields[4]);
    rec.distance = std::stod(fields[5]);
    rec.rho = std::stod(fields[6]);
    rec.converged = fields[7] == "1";
    records.push_back(rec);
  }
  return records;
}

// ---- aggregates ----

inline Json aggregates_to_json(const SweepAggregates& agg) {
  Json j;
  j["schema"] = "aggregates/1";
  j["bin_edges"] = agg.bin_edges;
  j["distance_split"] = agg.distance_split;
  Json per = Json::object();
  for (const auto& [name, pa] : agg.per_protocol) {
    auto class_json = [](const ClassAggregate& ca) {
      return Json{{"count", ca.count}, {"outage", ca.outage}, {"rho_sorted", ca.rho_sorted}};
    };
    Json bins = Json::array();
    for (const BinAggregate& bin : pa.bins) {
      if (bin.count == 0) {
        bins.push_back(nullptr);  // empty bin is absent, not zero
      } else {
        bins.push_back({{"count", bin.count}, {"mean_rho", bin.mean_rho}});
      }
    }
    per[name] = {{"count", pa.count},
                 {"outage", pa.outage},
                 {"low", class_json(pa.low)},
                 {"high", class_json(pa.high)},
                 {"bins", std::move(bins)}};
  }
  j["per_protocol"] = std::move(per);
  return j;
}

// ---- configuration ----

namespace detail {

template <typename T>
void maybe_get(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void apply_pathloss(const Json& j, const char* key, PathlossModel& model) {
  if (!j.contains(key)) return;
  const Json& m = j.at(key);
  maybe_get(m, "intercept_db", model.intercept_db);
  maybe_get(m, "slope_db_per_decade", model.slope_db_per_decade);
  maybe_get(m, "shadow_stddev_db", model.shadow_stddev_db);
}

}  // namespace detail

inline void apply_config(const Json& j, MruGrid& grid) {
  detail::maybe_get(j, "delta_t_s", grid.delta_t_s);
  detail::maybe_get(j, "delta_f_hz", grid.delta_f_hz);
  detail::maybe_get(j, "w_t", grid.w_t);
  detail::maybe_get(j, "w_f", grid.w_f);
}

inline void apply_config(const Json& j, ChannelParams& params) {
  detail::apply_pathloss(j, "bs_to_ue", params.bs_to_ue);
  detail::apply_pathloss(j, "ue_to_bs", params.ue_to_bs);
  detail::apply_pathloss(j, "bs_to_bs", params.bs_to_bs);
  detail::apply_pathloss(j, "ue_to_ue", params.ue_to_ue);
  detail::maybe_get(j, "noise_psd_dbm_hz", params.noise_psd_dbm_hz);
  detail::maybe_get(j, "noise_figure_bs_db", params.noise_figure_bs_db);
  detail::maybe_get(j, "noise_figure_ue_db", params.noise_figure_ue_db);
  detail::maybe_get(j, "min_coupling_loss_db", params.min_coupling_loss_db);
  detail::maybe_get(j, "seed", params.seed);
}

inline void apply_config(const Json& j, InterferenceFlags& flags) {
  detail::maybe_get(j, "self_cancellation", flags.self_cancellation);
  detail::maybe_get(j, "zero_intra_cell", flags.zero_intra_cell);
}

inline void apply_config(const Json& j, SolverConfig& solver) {
  detail::maybe_get(j, "n_max", solver.n_max);
  detail::maybe_get(j, "n_iter", solver.n_iter);
  detail::maybe_get(j, "epsilon", solver.epsilon);
  detail::maybe_get(j, "inner_iter_cap", solver.inner_iter_cap);
  detail::maybe_get(j, "seed", solver.seed);
  if (j.contains("alpha")) {
    if (j.at("alpha").is_null()) {
      solver.alpha.reset();
    } else {
      solver.alpha = j.at("alpha").get<double>();
    }
  }
}

inline void apply_config(const Json& j, SweepConfig& cfg) {
  detail::maybe_get(j, "runs", cfg.runs);
  if (j.contains("inter")) {
    cfg.inter.clear();
    for (const Json& r : j.at("inter")) cfg.inter.push_back(ratio_from_string(r.get<std::string>()));
  }
  if (j.contains("intra")) {
    cfg.intra.clear();
    for (const Json& r : j.at("intra")) cfg.intra.push_back(ratio_from_string(r.get<std::string>()));
  }
  detail::maybe_get(j, "total_demand_bits", cfg.total_demand_bits);
  detail::maybe_get(j, "bs_spacing_m", cfg.bs_spacing_m);
  detail::maybe_get(j, "bs_power_dbm", cfg.bs_power_dbm);
  detail::maybe_get(j, "ue_power_dbm", cfg.ue_power_dbm);
  if (j.contains("protocols")) {
    cfg.protocols.clear();
    for (const Json& p : j.at("protocols")) {
      cfg.protocols.push_back(protocol_from_string(p.get<std::string>()));
    }
  }
  detail::maybe_get(j, "bin_edges", cfg.bin_edges);
  detail::maybe_get(j, "distance_split", cfg.distance_split);
  detail::maybe_get(j, "distance_norm_p", cfg.distance_norm_p);
  detail::maybe_get(j, "out_dir", cfg.out_dir);
  detail::maybe_get(j, "seed", cfg.seed);
  detail::maybe_get(j, "threads", cfg.threads);
}

/// Config file layout: top-level sections "sweep", "grid", "channel",
/// "flags", "solver", each optional, each overriding only the fields it
/// names. Unknown sections are rejected.
inline void apply_config_file(const Json& j, SweepConfig& cfg) {
  static const std::vector<std::string> known = {"sweep", "grid", "channel", "flags", "solver"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const std::string& k : known) ok = ok || k == key;
    if (!ok) throw std::invalid_argument("config: unknown section: " + key);
  }
  if (j.contains("sweep")) apply_config(j.at("sweep"), cfg);
  if (j.contains("grid")) apply_config(j.at("grid"), cfg.grid);
  if (j.contains("channel")) apply_config(j.at("channel"), cfg.channel);
  if (j.contains("flags")) apply_config(j.at("flags"), cfg.flags);
  if (j.contains("solver")) apply_config(j.at("solver"), cfg.solver);
}

inline void load_config_file(const std::string& path, SweepConfig& cfg) {
  apply_config_file(Json::parse(read_text_file(path)), cfg);
}

}  // namespace flexdup
