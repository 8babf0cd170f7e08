// Simulation driver: scenario generation, single solves, Monte-Carlo sweeps,
// and record aggregation around the flexdup library.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flexdup/flexdup.hpp"

namespace {

using namespace flexdup;

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (content.empty() || content.back() != '\n') std::cout << '\n';
  } else {
    write_text_file(out_path, content);
  }
}

Scenario load_scenario(const std::string& path) {
  const Scenario scn = scenario_from_json(Json::parse(read_text_file(path)));
  const auto errors = validate(scn);
  if (!errors.empty()) {
    throw std::invalid_argument("scenario " + path + ": " + errors.front());
  }
  if (scn.num_services() == 0) {
    throw std::invalid_argument("scenario " + path + ": no services");
  }
  return scn;
}

struct GenArgs {
  std::string config_path;
  std::string inter = "5/5";
  std::string intra1 = "5/5";
  std::string intra2 = "5/5";
  std::uint64_t seed = 1;
  std::string out_path;
};

int run_gen(const GenArgs& args) {
  SweepConfig cfg;
  if (!args.config_path.empty()) load_config_file(args.config_path, cfg);
  const Scenario scn =
      generate_scenario(cfg, ratio_from_string(args.inter), ratio_from_string(args.intra1),
                        ratio_from_string(args.intra2), args.seed);
  emit(args.out_path, scenario_to_json(scn).dump(2));
  return 0;
}

struct SolveArgs {
  std::string scenario_path;
  std::string protocol = "safp";
  std::string config_path;
  std::optional<int> n_max;
  std::optional<int> n_iter;
  std::optional<double> epsilon;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  bool trace = false;
  std::string out_path;
  std::string dump_channel_path;
};

int run_solve(const SolveArgs& args) {
  SweepConfig cfg;
  if (!args.config_path.empty()) load_config_file(args.config_path, cfg);
  if (args.n_max) cfg.solver.n_max = *args.n_max;
  if (args.n_iter) cfg.solver.n_iter = *args.n_iter;
  if (args.epsilon) cfg.solver.epsilon = *args.epsilon;
  if (args.alpha) cfg.solver.alpha = *args.alpha;
  if (args.seed) cfg.seed = *args.seed;

  const Scenario scn = load_scenario(args.scenario_path);
  ChannelParams channel = cfg.channel;
  channel.seed = derive_seed(cfg.seed, 1);
  const ChannelMatrix chan = build_channel(scn, channel);
  if (!args.dump_channel_path.empty()) {
    write_text_file(args.dump_channel_path, channel_to_csv(chan));
  }
  const LinkCoupling coupling = build_coupling(scn, chan, channel, cfg.flags);

  SolverConfig solver = cfg.solver;
  solver.seed = derive_seed(cfg.seed, 2);
  solver.keep_trace = args.trace;

  const Protocol protocol = protocol_from_string(args.protocol);
  const SolveOutcome outcome = solve_with(protocol, scn, coupling, scn.grid, solver);

  Json j = outcome_to_json(outcome, scn, args.trace);
  j["protocol"] = to_string(protocol);
  j["seed"] = cfg.seed;
  emit(args.out_path, j.dump(2));
  return 0;
}

struct SweepArgs {
  std::string config_path;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir;
};

int run_sweep_cmd(const SweepArgs& args) {
  SweepConfig cfg;
  if (!args.config_path.empty()) load_config_file(args.config_path, cfg);
  if (args.runs) cfg.runs = *args.runs;
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;

  const SweepResult result = run_sweep(cfg);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string records_path = cfg.out_dir + "/records.csv";
  const std::string aggregates_path = cfg.out_dir + "/aggregates.json";
  write_text_file(records_path, records_to_csv(result.records));
  write_text_file(aggregates_path, aggregates_to_json(result.aggregates).dump(2) + "\n");

  std::cout << "records: " << records_path << " (" << result.records.size() << " rows)\n"
            << "aggregates: " << aggregates_path << "\n";
  return 0;
}

struct AggregateArgs {
  std::string records_path;
  std::string config_path;
  std::string out_path;
};

int run_aggregate(const AggregateArgs& args) {
  SweepConfig cfg;
  if (!args.config_path.empty()) load_config_file(args.config_path, cfg);
  const std::vector<RunRecord> records = records_from_csv(read_text_file(args.records_path));
  const SweepAggregates agg = aggregate(records, cfg.bin_edges, cfg.distance_split);
  emit(args.out_path, aggregates_to_json(agg).dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint UL/DL resource partitioning simulator for flexible-duplex networks"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "Generate a random two-cell scenario as JSON");
  gen->add_option("--config", gen_args.config_path, "JSON config file");
  gen->add_option("--inter", gen_args.inter, "cell-1/cell-2 demand ratio (a/b)");
  gen->add_option("--intra1", gen_args.intra1, "cell-1 UL/DL demand ratio (a/b)");
  gen->add_option("--intra2", gen_args.intra2, "cell-2 UL/DL demand ratio (a/b)");
  gen->add_option("--seed", gen_args.seed, "instance seed");
  gen->add_option("--out", gen_args.out_path, "output file (default stdout)");

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "Solve one scenario under one protocol");
  solve->add_option("--scenario", solve_args.scenario_path, "scenario JSON file")->required();
  solve->add_option("--protocol", solve_args.protocol, "fix|dtdd|fp|safp|rmdi")
      ->check(CLI::IsMember({"fix", "dtdd", "fp", "safp", "rmdi"}));
  solve->add_option("--config", solve_args.config_path, "JSON config file");
  solve->add_option("--nmax", solve_args.n_max, "random restarts");
  solve->add_option("--niter", solve_args.n_iter, "coupling updates per restart");
  solve->add_option("--eps", solve_args.epsilon, "convergence threshold");
  solve->add_option("--alpha", solve_args.alpha, "muting threshold");
  solve->add_option("--seed", solve_args.seed, "channel and solver seed");
  solve->add_flag("--trace", solve_args.trace, "include the iteration trace in the output");
  solve->add_option("--out", solve_args.out_path, "output file (default stdout)");
  solve->add_option("--dump-channel", solve_args.dump_channel_path,
                    "also write the drawn channel gains as CSV");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over the demand-ratio grid");
  sweep->add_option("--config", sweep_args.config_path, "JSON config file");
  sweep->add_option("--runs", sweep_args.runs, "runs per ratio combination");
  sweep->add_option("--seed", sweep_args.seed, "master seed");
  sweep->add_option("--threads", sweep_args.threads, "worker threads (0 = hardware)");
  sweep->add_option("--out", sweep_args.out_dir, "output directory");

  AggregateArgs agg_args;
  CLI::App* agg = app.add_subcommand("aggregate", "Aggregate a records CSV into summary JSON");
  agg->add_option("--records", agg_args.records_path, "records CSV file")->required();
  agg->add_option("--config", agg_args.config_path, "JSON config file");
  agg->add_option("--out", agg_args.out_path, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (solve->parsed()) return run_solve(solve_args);
    if (sweep->parsed()) return run_sweep_cmd(sweep_args);
    if (agg->parsed()) return run_aggregate(agg_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
