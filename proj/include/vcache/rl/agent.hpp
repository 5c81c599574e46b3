#pragma once

// DDPG caching agent: state assembly, reward, exploration noise, replay
// memory, actor/critic updates, soft target tracking and the training loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcache/caching/problem.hpp"
#include "vcache/core/rng.hpp"
#include "vcache/rl/mlp.hpp"

namespace vcache::rl {

using State = std::vector<double>;
using Action = std::vector<double>;

/// Divisors that bring every state component into [0, 1].
struct StateScales {
  double rate = 1.0;      // bits/s
  double latency = 1.0;   // s
  double energy = 1.0;    // coins
  double cache = 1.0;     // bytes (requester demand)
  double deadline = 1.0;  // s
  double capacity = 1.0;  // bytes (provider capacity)

  /// Divisors derived from channel and scenario bounds.
  static StateScales for_channel(const ChannelParams& chan, double max_cache_bytes,
                                 double max_deadline_s, double max_capacity_bytes,
                                 double max_energy_coins);
};

std::size_t state_size(std::size_t requesters, std::size_t providers);

/// Layout: R, T, E (row-major I*P each), heading one-hot for requesters then
/// providers, (c, tau) per requester, capacity per provider.
State assemble_state(const caching::CachingProblem& p, const StateScales& scales);

enum class OptimizerKind { sgd, adam };

struct AgentConfig {
  double actor_lr = 1e-2;
  double critic_lr = 1e-2;
  double discount = 0.9;
  double soft_update = 0.01;
  std::size_t batch = 32;
  std::size_t episodes = 4000;
  std::size_t steps_per_episode = 20;
  double penalty = -100.0;
  std::vector<std::size_t> hidden{128, 128};
  std::size_t replay_capacity = 100000;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_sigma_final = 0.02;
  double ou_mu = 0.0;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Rewards are divided by this before they reach the critic.
  double reward_scale = 100.0;

  void validate() const;
};

/// Immediate reward: utility when feasible, else the penalty.
double reward(const caching::CachingProblem& p, const caching::Assignment& a,
              const AgentConfig& cfg);

/// Mean-reverting exploration noise, one independent component per action.
class OuNoise {
 public:
  OuNoise(std::size_t dim, double theta, double sigma, double mu);

  void reset();
  /// x += theta * (mu - x) + sigma * N(0, 1); returns the new state.
  std::span<const double> sample(Rng& rng);
  void set_sigma(double sigma) { sigma_ = sigma; }
  double sigma() const { return sigma_; }
  std::span<const double> state() const { return state_; }

 private:
  std::vector<double> state_;
  double theta_;
  double sigma_;
  double mu_;
};

struct Transition {
  State state;
  Action action;
  double reward = 0.0;
  State next_state;
};

/// Fixed-capacity ring buffer of transitions.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  const Transition& at(std::size_t k) const { return items_.at(k); }

  /// `count` distinct uniformly drawn indices (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> items_;
};

/// Adam moment estimates for one network; unused with plain SGD.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

struct Agent {
  AgentConfig config;
  Mlp actor;
  Mlp critic;
  Mlp actor_target;
  Mlp critic_target;
  AdamState actor_adam;
  AdamState critic_adam;

  /// Builds primaries with random weights and copies them into the targets.
  static Agent create(std::size_t state_dim, std::size_t action_dim, const AgentConfig& cfg,
                      Rng& rng);

  std::size_t state_dim() const { return actor.input_size(); }
  std::size_t action_dim() const { return actor.output_size(); }

  nlohmann::json checkpoint() const;
  static Agent restore(const nlohmann::json& doc, const AgentConfig& cfg);
};

/// Policy output plus one noise sample, clamped to [0, 1].
Action select_action(const Mlp& actor, std::span<const double> state, OuNoise& noise, Rng& rng);

/// Q(s, a); the critic's last layer is linear.
double critic_value(const Mlp& critic, std::span<const double> state,
                    std::span<const double> action);

/// Critic-input row [s; a] for a batch.
Matrix<double> critic_input(std::span<const Transition* const> batch, bool next_state,
                            const Matrix<double>* actions);

struct TrainStats {
  double critic_loss = 0.0;  // mean squared TD error before the update
  double mean_q = 0.0;
};

/// One mini-batch update: TD targets from the target networks, critic
/// descent on the squared TD error, actor ascent on Q(s, pi(s)).
/// Throws InvalidArgument on an empty batch.
TrainStats train_step(Agent& agent, std::span<const Transition* const> batch);

/// target = w * primary + (1 - w) * target for both networks.
void soft_update(Agent& agent);

/// Gradients used by train_step, exposed for checking against finite
/// differences. Both are averages over the batch.
struct CriticGradient {
  MlpGradients grads;
  double loss = 0.0;
};
CriticGradient critic_loss_gradient(const Mlp& critic, std::span<const Transition* const> batch,
                                    std::span<const double> targets);
/// Gradient of -(1/V) sum Q(s, pi(s)) with respect to actor parameters.
MlpGradients actor_objective_gradient(const Mlp& actor, const Mlp& critic,
                                      std::span<const Transition* const> batch);

/// TD targets y = r / reward_scale + discount * Q'(s', pi'(s')).
std::vector<double> td_targets(const Agent& agent, std::span<const Transition* const> batch);

/// What an environment hands back after an action.
struct StepOutcome {
  double reward = 0.0;
  State next_state;
  std::size_t successes = 0;
  std::size_t requesters = 0;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t state_size() const = 0;
  virtual std::size_t action_size() const = 0;
  /// Sets up the vehicular environment for a new episode.
  virtual State reset() = 0;
  /// Applies a continuous action (the environment refines it).
  virtual StepOutcome step(std::span<const double> action) = 0;
};

struct EpisodeRecord {
  double reward = 0.0;  // sum of step rewards
  std::size_t successes = 0;
  std::size_t requests = 0;
};

struct TrainingResult {
  std::vector<EpisodeRecord> episodes;
  std::vector<double> cumulative_average;  // running mean of episode rewards
};

using EpisodeCallback = std::function<void(std::size_t episode, const EpisodeRecord&)>;

/// The DDPG loop: per episode reset, per step act / observe / store / learn /
/// track targets. Exploration sigma decays linearly to ou_sigma_final.
TrainingResult run_training(Environment& env, Agent& agent, Rng& rng,
                            const EpisodeCallback& on_episode = {});

}  // namespace vcache::rl
