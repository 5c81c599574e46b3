#pragma once

// The simulation loop: vehicles move, each slot becomes a caching problem,
// a policy assigns it, contracts pay for the successful pairs and the base
// stations record them on chain.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vcache/caching/problem.hpp"
#include "vcache/consensus/engine.hpp"
#include "vcache/harness/config.hpp"
#include "vcache/ledger/chain.hpp"
#include "vcache/rl/agent.hpp"

namespace vcache::harness {

enum class Policy { drl, gcc, rcc };

Policy parse_policy(const std::string& s);
const char* to_string(Policy p);

/// Base stations, identities, wallets and the consensus engine. Lives for a
/// whole run; episodes replay vehicles but never rewind the chain.
class LedgerRuntime {
 public:
  LedgerRuntime(const ScenarioConfig& cfg, Rng& rng);

  struct StepRecord {
    std::size_t contracts = 0;
    std::size_t aborted = 0;
    std::vector<consensus::RoundReport> rounds;
  };

  /// Runs the message exchange and contracts for one slot and any consensus
  /// rounds that became due.
  StepRecord record(const caching::CachingProblem& problem, const caching::Assignment& a,
                    const std::vector<bool>& success, double now);

  const ledger::Chain& chain() const { return engine_->chain(); }
  const ledger::WalletBook& wallets() const { return wallets_; }
  const consensus::ConsensusEngine& engine() const { return *engine_; }
  std::size_t contracts_executed() const { return contracts_; }
  std::int64_t minted() const { return minted_; }

 private:
  void end_epoch_if_due(const consensus::RoundReport& r);

  const ScenarioConfig& cfg_;
  Rng rng_;
  ledger::CertificateAuthority ca_;
  std::vector<ledger::Identity> requesters_;
  std::vector<ledger::Identity> providers_;
  ledger::WalletBook wallets_;
  std::unique_ptr<consensus::ConsensusEngine> engine_;
  std::vector<consensus::Voter> voters_;  // this epoch
  std::size_t contracts_ = 0;
  std::int64_t minted_ = 0;
};

/// The vehicular environment seen by the agent and the baselines.
class CachingEnvironment : public rl::Environment {
 public:
  /// `trace` is required when the config selects trace mobility.
  CachingEnvironment(const ScenarioConfig& cfg, const mobility::Trace* trace = nullptr);
  ~CachingEnvironment() override;

  std::size_t state_size() const override;
  std::size_t action_size() const override;
  rl::State reset() override;
  /// Refines the action into an assignment and applies it.
  rl::StepOutcome step(std::span<const double> action) override;
  rl::StepOutcome apply(const caching::Assignment& a);

  const caching::CachingProblem& problem() const { return *problem_; }
  const rl::StateScales& scales() const { return scales_; }
  double now() const { return now_; }
  LedgerRuntime* ledger() { return ledger_.get(); }
  /// Consensus reports produced since the last call.
  std::vector<consensus::RoundReport> take_rounds();

 private:
  void build_problem();
  void advance();

  const ScenarioConfig& cfg_;
  const mobility::Trace* trace_;
  std::vector<std::string> trace_ids_;
  rl::StateScales scales_;
  std::unique_ptr<LedgerRuntime> ledger_;

  std::vector<VehicleState> vehicles_;  // requesters first, then providers
  std::vector<Vec2> jitter_;
  Rng mobility_rng_;
  double now_ = 0.0;           // run clock; never rewinds
  double episode_time_ = 0.0;  // position in the mobility source
  double episode_start_ = 0.0;
  std::optional<caching::CachingProblem> problem_;
  std::vector<consensus::RoundReport> rounds_;
};

struct EpisodeMetrics {
  double reward = 0.0;
  double cumulative_average = 0.0;
  double success_pct = 0.0;
  std::size_t successes = 0;
  std::size_t requests = 0;
};

struct MetricSeries {
  std::vector<EpisodeMetrics> episodes;
  std::vector<consensus::RoundReport> rounds;
  std::vector<double> block_utilities;  // leader utility of every appended block

  void write_csv(std::ostream& out) const;
  void write_rounds(std::ostream& out) const;
};

struct ExperimentResult {
  MetricSeries metrics;
  std::optional<rl::Agent> agent;       // trained agent for the drl policy
  std::optional<ledger::Chain> chain;   // final chain when the ledger is enabled
  std::size_t contracts = 0;
};

/// Runs `cfg.agent.episodes` episodes under `policy`. The drl policy trains
/// the agent online (or evaluates `pretrained` greedily when given).
ExperimentResult run_experiment(const ScenarioConfig& cfg, Policy policy,
                                const rl::Agent* pretrained = nullptr);

/// Loads the trace named by the config, if any.
std::optional<mobility::Trace> load_trace(const ScenarioConfig& cfg);

/// `run-<UTC timestamp>-seed<N>` under `root`, created on disk.
std::filesystem::path make_run_dir(const std::filesystem::path& root, std::uint64_t seed);

enum class SweepAxis { requesters, block_size, leader_distance };

SweepAxis parse_axis(const std::string& s);

/// One CSV row per value. Requester sweeps run full experiments; the other
/// axes evaluate the consensus utility directly.
void sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values,
           Policy policy, std::ostream& out);

/// Block utility of a commission of `n` stations on a circle whose adjacent
/// members are `spacing` meters apart, each with `cpu_hz`.
double commission_utility(const consensus::ConsensusParams& p, std::size_t n, double spacing,
                          double cpu_hz, double transmission, double tau);

/// Grid-driven positions for `vehicles` vehicles over `steps` slots, mapped
/// into `box`.
std::vector<mobility::TraceRecord> generate_synthetic_trace(const ScenarioConfig& cfg,
                                                            std::size_t vehicles,
                                                            std::size_t steps);

}  // namespace vcache::harness
