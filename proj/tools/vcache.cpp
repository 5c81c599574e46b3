// Command-line front end: training, evaluation, the instance solver, sweeps,
// synthetic traces and chain inspection.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vcache/caching/problem.hpp"
#include "vcache/core/error.hpp"
#include "vcache/harness/config.hpp"
#include "vcache/harness/experiment.hpp"
#include "vcache/ledger/chain.hpp"
#include "vcache/mobility/trace.hpp"
#include "vcache/refine/bipartite.hpp"

namespace fs = std::filesystem;
using namespace vcache;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
};

harness::ScenarioConfig resolve(const Common& c) {
  harness::ScenarioConfig cfg = c.config.empty() ? harness::ScenarioConfig{}
                                                 : harness::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Scenario INI file (built-in defaults when omitted)")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Override the scenario seed");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

fs::path write_run(const harness::ScenarioConfig& cfg, const harness::ExperimentResult& res,
                   const std::string& root) {
  const fs::path dir = harness::make_run_dir(root, cfg.seed);
  write_file(dir / "config.ini", harness::to_ini(cfg));
  std::ostringstream csv;
  res.metrics.write_csv(csv);
  write_file(dir / "metrics.csv", csv.str());
  std::ostringstream rounds;
  res.metrics.write_rounds(rounds);
  write_file(dir / "consensus.jsonl", rounds.str());
  if (res.agent) write_file(dir / "agent.json", res.agent->checkpoint().dump());
  if (res.chain) {
    std::ofstream out(dir / "chain.bin", std::ios::binary);
    res.chain->dump(out);
  }
  return dir;
}

void summarize(const harness::ExperimentResult& res) {
  const auto& eps = res.metrics.episodes;
  if (eps.empty()) {
    std::cout << "no episodes run\n";
    return;
  }
  double success = 0.0;
  for (const auto& e : eps) success += e.success_pct;
  std::cout << "episodes: " << eps.size() << "\n"
            << "final cumulative average reward: " << eps.back().cumulative_average << "\n"
            << "mean success: " << success / static_cast<double>(eps.size()) << "%\n"
            << "consensus rounds: " << res.metrics.rounds.size()
            << ", blocks appended: " << res.metrics.block_utilities.size() << "\n";
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw InvalidArgument("--values needs at least one number");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blockchain-secured vehicular edge caching simulator"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train = app.add_subcommand("train", "Train the DRL caching agent");
  add_common(train, train_opts);
  train->add_option("--out", train_opts.out, "Directory that receives the run folder");

  Common eval_opts;
  std::string policy = "gcc";
  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Run a fixed caching policy");
  add_common(eval, eval_opts);
  eval->add_option("--out", eval_opts.out, "Directory that receives the run folder");
  eval->add_option("--policy", policy, "drl, gcc or rcc")
      ->check(CLI::IsMember({"drl", "gcc", "rcc"}));
  eval->add_option("--checkpoint", checkpoint, "Agent checkpoint (required for drl)")
      ->check(CLI::ExistingFile);

  std::string instance;
  std::string method = "exact";
  std::uint64_t solve_seed = 1;
  std::string action_path;
  auto* solve = app.add_subcommand("solve", "Solve one caching instance from JSON");
  solve->add_option("instance", instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--method", method, "exact, gcc, rcc or refine")
      ->check(CLI::IsMember({"exact", "gcc", "rcc", "refine"}));
  solve->add_option("--seed", solve_seed, "Seed for rcc");
  solve->add_option("--action", action_path,
                    "JSON array of fractional x'(i,p), row-major (for refine)")
      ->check(CLI::ExistingFile);

  Common sweep_opts;
  std::string axis = "block_size";
  std::string values = "10,20,30,40,50";
  std::string sweep_policy = "gcc";
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Sweep one scenario axis and print a CSV table");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "requesters, block_size or leader_distance")
      ->check(CLI::IsMember({"requesters", "block_size", "leader_distance"}));
  sweep->add_option("--values", values, "Comma-separated axis values");
  sweep->add_option("--policy", sweep_policy, "Policy for the requesters axis")
      ->check(CLI::IsMember({"drl", "gcc", "rcc"}));
  sweep->add_option("--out", sweep_out, "CSV file (stdout when omitted)");

  Common trace_opts;
  std::size_t vehicles = 150;
  std::size_t steps = 100;
  std::string trace_out = "trace.csv";
  auto* gen = app.add_subcommand("gen-trace", "Write a synthetic grid-mobility trace");
  add_common(gen, trace_opts);
  gen->add_option("--vehicles", vehicles, "Number of vehicles");
  gen->add_option("--steps", steps, "Number of slots after the initial positions");
  gen->add_option("--out", trace_out, "Output CSV");

  std::string chain_path;
  std::optional<std::size_t> block_index;
  auto* inspect = app.add_subcommand("inspect", "Validate a chain dump or print one block");
  inspect->add_option("chain", chain_path, "Chain dump")->required()->check(CLI::ExistingFile);
  inspect->add_option("--block", block_index, "Block index to print as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = resolve(train_opts);
      const auto res = harness::run_experiment(cfg, harness::Policy::drl);
      const auto dir = write_run(cfg, res, train_opts.out);
      summarize(res);
      std::cout << "run directory: " << dir.string() << "\n";
    } else if (*eval) {
      auto cfg = resolve(eval_opts);
      const auto pol = harness::parse_policy(policy);
      std::optional<rl::Agent> agent;
      if (pol == harness::Policy::drl) {
        if (checkpoint.empty()) throw InvalidArgument("--policy drl needs --checkpoint");
        std::ifstream in(checkpoint);
        agent = rl::Agent::restore(nlohmann::json::parse(in), cfg.agent);
      }
      const auto res = harness::run_experiment(cfg, pol, agent ? &*agent : nullptr);
      const auto dir = write_run(cfg, res, eval_opts.out);
      summarize(res);
      std::cout << "run directory: " << dir.string() << "\n";
    } else if (*solve) {
      std::ifstream in(instance);
      const auto problem = caching::problem_from_json(nlohmann::json::parse(in));
      caching::Assignment a = problem.empty_assignment();
      if (method == "exact") {
        a = caching::solve_exact(problem).assignment;
      } else if (method == "gcc") {
        a = caching::gcc(problem);
      } else if (method == "rcc") {
        Rng rng(solve_seed);
        a = caching::rcc(problem, rng);
      } else {
        if (action_path.empty()) throw InvalidArgument("--method refine needs --action");
        std::ifstream ain(action_path);
        const auto z = nlohmann::json::parse(ain).get<std::vector<double>>();
        a = refine::refine(z, problem);
      }
      const auto report = caching::feasible(problem, a);
      const auto success = caching::successful_requesters(problem, a);
      nlohmann::json out = {{"method", method},
                            {"assignment", caching::to_json(a)},
                            {"utility", caching::utility(problem, a)},
                            {"feasible", report.feasible},
                            {"successful", success}};
      std::cout << out.dump(2) << "\n";
    } else if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto vals = parse_values(values);
      if (sweep_out.empty()) {
        harness::sweep(cfg, harness::parse_axis(axis), vals, harness::parse_policy(sweep_policy),
                       std::cout);
      } else {
        std::ofstream out(sweep_out);
        if (!out) throw Error("cannot write '" + sweep_out + "'");
        harness::sweep(cfg, harness::parse_axis(axis), vals, harness::parse_policy(sweep_policy),
                       out);
      }
    } else if (*gen) {
      const auto cfg = resolve(trace_opts);
      const auto records = harness::generate_synthetic_trace(cfg, vehicles, steps);
      std::ofstream out(trace_out);
      if (!out) throw Error("cannot write '" + trace_out + "'");
      mobility::write_trace(out, records);
      std::cout << "wrote " << records.size() << " records to " << trace_out << "\n";
    } else if (*inspect) {
      std::ifstream in(chain_path, std::ios::binary);
      const auto blocks = ledger::Chain::load(in);
      if (block_index) {
        if (*block_index >= blocks.size()) {
          throw InvalidArgument("block " + std::to_string(*block_index) + " not in chain of " +
                                std::to_string(blocks.size()));
        }
        std::cout << blocks[*block_index].to_json().dump(2) << "\n";
      } else {
        std::size_t cap = 1;
        for (const auto& b : blocks) cap = std::max(cap, b.txs.size());
        const auto bad = ledger::Chain::validate(blocks, cap);
        std::cout << "blocks: " << blocks.size() << "\n";
        if (bad) {
          std::cout << "validation failed at block " << *bad << "\n";
          return 2;
        }
        std::cout << "chain valid\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
