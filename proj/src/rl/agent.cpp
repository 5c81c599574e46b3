#include "vcache/rl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "vcache/core/error.hpp"

namespace vcache::rl {

namespace {

double clamp01(double v) {
  if (std::isnan(v)) return 1.0;
  return std::clamp(v, 0.0, 1.0);
}

void apply_gradients(Mlp& net, const MlpGradients& grads, double lr, const AgentConfig& cfg,
                     AdamState& adam) {
  auto& layers = net.layers();
  if (cfg.optimizer == OptimizerKind::sgd) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto w = layers[l].weights.flat();
      auto gw = grads.weights[l].flat();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * gw[k];
      auto& b = layers[l].bias;
      const auto& gb = grads.bias[l];
      for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
    }
    return;
  }
  if (adam.m.empty()) {
    adam.m.assign(net.parameter_count(), 0.0);
    adam.v.assign(net.parameter_count(), 0.0);
  }
  ++adam.t;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.t));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.t));
  std::size_t k = 0;
  auto step = [&](double& param, double g) {
    adam.m[k] = cfg.adam_beta1 * adam.m[k] + (1.0 - cfg.adam_beta1) * g;
    adam.v[k] = cfg.adam_beta2 * adam.v[k] + (1.0 - cfg.adam_beta2) * g * g;
    param -= lr * (adam.m[k] / c1) / (std::sqrt(adam.v[k] / c2) + cfg.adam_eps);
    ++k;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weights.flat();
    auto gw = grads.weights[l].flat();
    for (std::size_t j = 0; j < w.size(); ++j) step(w[j], gw[j]);
    auto& b = layers[l].bias;
    for (std::size_t j = 0; j < b.size(); ++j) step(b[j], grads.bias[l][j]);
  }
}

Matrix<double> stack_states(std::span<const Transition* const> batch, bool next_state) {
  const std::size_t dim = next_state ? batch[0]->next_state.size() : batch[0]->state.size();
  Matrix<double> out(batch.size(), dim);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const State& s = next_state ? batch[n]->next_state : batch[n]->state;
    if (s.size() != dim) throw InvalidArgument("inconsistent state width in batch");
    std::copy(s.begin(), s.end(), out.row(n).begin());
  }
  return out;
}

}  // namespace

StateScales StateScales::for_channel(const ChannelParams& chan, double max_cache_bytes,
                                     double max_deadline_s, double max_capacity_bytes,
                                     double max_energy_coins) {
  StateScales s;
  s.rate = chan.bandwidth_hz *
           std::log2(1.0 + chan.tx_power_mw * chan.channel_gain / chan.noise_mw);
  s.latency = max_deadline_s;
  s.energy = max_energy_coins;
  s.cache = max_cache_bytes;
  s.deadline = max_deadline_s;
  s.capacity = max_capacity_bytes;
  return s;
}

std::size_t state_size(std::size_t requesters, std::size_t providers) {
  return 3 * requesters * providers + 4 * (requesters + providers) + 2 * requesters + providers;
}

State assemble_state(const caching::CachingProblem& p, const StateScales& scales) {
  const std::size_t n_req = p.requester_count();
  const std::size_t n_pro = p.provider_count();
  State s;
  s.reserve(state_size(n_req, n_pro));
  for (double r : p.rates().flat()) s.push_back(clamp01(r / scales.rate));
  for (double t : p.latencies().flat()) s.push_back(clamp01(t / scales.latency));
  for (double e : p.energies().flat()) s.push_back(clamp01(e / scales.energy));
  auto one_hot = [&](Heading h) {
    for (int k = 0; k < kHeadingCount; ++k) s.push_back(static_cast<int>(h) == k ? 1.0 : 0.0);
  };
  for (const auto& r : p.requesters()) one_hot(r.heading);
  for (const auto& v : p.providers()) one_hot(v.heading);
  for (const auto& r : p.requesters()) {
    s.push_back(clamp01(r.content.cache_bytes / scales.cache));
    s.push_back(clamp01(r.content.deadline_s / scales.deadline));
  }
  for (const auto& v : p.providers()) s.push_back(clamp01(v.capacity_bytes / scales.capacity));
  return s;
}

void AgentConfig::validate() const {
  if (discount < 0.0 || discount > 1.0) throw InvalidArgument("agent.discount must be in [0,1]");
  if (soft_update < 0.0 || soft_update > 1.0) {
    throw InvalidArgument("agent.soft_update must be in [0,1]");
  }
  if (batch < 1) throw InvalidArgument("agent.batch must be >= 1");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw InvalidArgument("learning rates must be > 0");
  if (replay_capacity < batch) throw InvalidArgument("agent.replay_capacity must be >= batch");
  if (!(reward_scale > 0.0)) throw InvalidArgument("agent.reward_scale must be > 0");
  if (ou_sigma < 0.0 || ou_sigma_final < 0.0 || ou_theta < 0.0) {
    throw InvalidArgument("noise parameters must be non-negative");
  }
}

double reward(const caching::CachingProblem& p, const caching::Assignment& a,
              const AgentConfig& cfg) {
  return caching::feasible(p, a) ? caching::utility(p, a) : cfg.penalty;
}

OuNoise::OuNoise(std::size_t dim, double theta, double sigma, double mu)
    : state_(dim, mu), theta_(theta), sigma_(sigma), mu_(mu) {}

void OuNoise::reset() { std::fill(state_.begin(), state_.end(), mu_); }

std::span<const double> OuNoise::sample(Rng& rng) {
  for (double& x : state_) x += theta_ * (mu_ - x) + sigma_ * rng.normal();
  return state_;
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
}

void ReplayMemory::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t count, Rng& rng) const {
  const std::size_t n = items_.size();
  count = std::min(count, n);
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = rng.uniform_index(j + 1);
    if (seen.insert(t).second) {
      picked.push_back(t);
    } else {
      seen.insert(j);
      picked.push_back(j);
    }
  }
  return picked;
}

Agent Agent::create(std::size_t state_dim, std::size_t action_dim, const AgentConfig& cfg,
                    Rng& rng) {
  cfg.validate();
  Agent agent;
  agent.config = cfg;
  std::vector<std::size_t> actor_sizes{state_dim};
  actor_sizes.insert(actor_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  actor_sizes.push_back(action_dim);
  std::vector<std::size_t> critic_sizes{state_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  critic_sizes.push_back(1);
  agent.actor = Mlp(actor_sizes, OutputActivation::squash, rng);
  agent.critic = Mlp(critic_sizes, OutputActivation::linear, rng);
  agent.actor_target = agent.actor;
  agent.critic_target = agent.critic;
  return agent;
}

nlohmann::json Agent::checkpoint() const {
  return {{"format", "vcache-agent"},
          {"version", 1},
          {"actor", actor.to_json()},
          {"critic", critic.to_json()},
          {"actor_target", actor_target.to_json()},
          {"critic_target", critic_target.to_json()}};
}

Agent Agent::restore(const nlohmann::json& doc, const AgentConfig& cfg) {
  try {
    if (doc.at("format").get<std::string>() != "vcache-agent" || doc.at("version").get<int>() != 1) {
      throw ParseError("unsupported checkpoint format");
    }
    Agent agent;
    agent.config = cfg;
    agent.actor = Mlp::from_json(doc.at("actor"));
    agent.critic = Mlp::from_json(doc.at("critic"));
    agent.actor_target = Mlp::from_json(doc.at("actor_target"));
    agent.critic_target = Mlp::from_json(doc.at("critic_target"));
    if (agent.critic.input_size() != agent.actor.input_size() + agent.actor.output_size()) {
      throw ParseError("checkpoint critic does not match actor");
    }
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

Action select_action(const Mlp& actor, std::span<const double> state, OuNoise& noise, Rng& rng) {
  if (state.size() != actor.input_size()) throw InvalidArgument("state width mismatch");
  Action a = actor.forward(state);
  const auto n = noise.sample(rng);
  if (n.size() != a.size()) throw InvalidArgument("noise width mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!std::isfinite(a[k])) throw Error("actor output is not finite; training diverged");
    a[k] = std::clamp(a[k] + n[k], 0.0, 1.0);
  }
  return a;
}

double critic_value(const Mlp& critic, std::span<const double> state,
                    std::span<const double> action) {
  if (state.size() + action.size() != critic.input_size()) {
    throw InvalidArgument("critic input width mismatch");
  }
  std::vector<double> x(state.begin(), state.end());
  x.insert(x.end(), action.begin(), action.end());
  return critic.forward(x).front();
}

Matrix<double> critic_input(std::span<const Transition* const> batch, bool next_state,
                            const Matrix<double>* actions) {
  const Matrix<double> states = stack_states(batch, next_state);
  const std::size_t action_dim = actions ? actions->cols() : batch[0]->action.size();
  Matrix<double> x(batch.size(), states.cols() + action_dim);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    auto row = x.row(n);
    std::copy(states.row(n).begin(), states.row(n).end(), row.begin());
    if (actions) {
      std::copy(actions->row(n).begin(), actions->row(n).end(), row.begin() + states.cols());
    } else {
      const Action& a = batch[n]->action;
      if (a.size() != action_dim) throw InvalidArgument("inconsistent action width in batch");
      std::copy(a.begin(), a.end(), row.begin() + states.cols());
    }
  }
  return x;
}

std::vector<double> td_targets(const Agent& agent, std::span<const Transition* const> batch) {
  const Matrix<double> next = stack_states(batch, true);
  const Matrix<double> next_actions = agent.actor_target.forward(next);
  const Matrix<double> q_next = agent.critic_target.forward(critic_input(batch, true, &next_actions));
  std::vector<double> y(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    y[n] = batch[n]->reward / agent.config.reward_scale + agent.config.discount * q_next(n, 0);
  }
  return y;
}

CriticGradient critic_loss_gradient(const Mlp& critic, std::span<const Transition* const> batch,
                                    std::span<const double> targets) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const double v = static_cast<double>(batch.size());
  Mlp::Tape tape;
  const Matrix<double> q = critic.forward(critic_input(batch, false, nullptr), &tape);
  Matrix<double> d_q(batch.size(), 1);
  CriticGradient out{critic.zero_gradients(), 0.0};
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const double err = targets[n] - q(n, 0);
    out.loss += err * err / v;
    d_q(n, 0) = -2.0 * err / v;
  }
  critic.backward(tape, d_q, out.grads);
  return out;
}

MlpGradients actor_objective_gradient(const Mlp& actor, const Mlp& critic,
                                      std::span<const Transition* const> batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const double v = static_cast<double>(batch.size());
  Mlp::Tape actor_tape;
  const Matrix<double> actions = actor.forward(stack_states(batch, false), &actor_tape);
  Mlp::Tape critic_tape;
  critic.forward(critic_input(batch, false, &actions), &critic_tape);
  Matrix<double> d_q(batch.size(), 1, -1.0 / v);
  MlpGradients unused = critic.zero_gradients();
  const Matrix<double> d_x = critic.backward(critic_tape, d_q, unused);
  const std::size_t offset = actor.input_size();
  Matrix<double> d_a(batch.size(), actor.output_size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    for (std::size_t k = 0; k < d_a.cols(); ++k) d_a(n, k) = d_x(n, offset + k);
  }
  MlpGradients grads = actor.zero_gradients();
  actor.backward(actor_tape, d_a, grads);
  return grads;
}

TrainStats train_step(Agent& agent, std::span<const Transition* const> batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const std::vector<double> y = td_targets(agent, batch);
  CriticGradient cg = critic_loss_gradient(agent.critic, batch, y);
  TrainStats stats;
  stats.critic_loss = cg.loss;
  apply_gradients(agent.critic, cg.grads, agent.config.critic_lr, agent.config, agent.critic_adam);
  const MlpGradients ag = actor_objective_gradient(agent.actor, agent.critic, batch);
  apply_gradients(agent.actor, ag, agent.config.actor_lr, agent.config, agent.actor_adam);
  double q_sum = 0.0;
  for (double t : y) q_sum += t;
  stats.mean_q = q_sum / static_cast<double>(y.size());
  return stats;
}

void soft_update(Agent& agent) {
  agent.actor_target.blend_from(agent.actor, agent.config.soft_update);
  agent.critic_target.blend_from(agent.critic, agent.config.soft_update);
}

TrainingResult run_training(Environment& env, Agent& agent, Rng& rng,
                            const EpisodeCallback& on_episode) {
  const AgentConfig& cfg = agent.config;
  if (env.state_size() != agent.state_dim() || env.action_size() != agent.action_dim()) {
    throw InvalidArgument("environment and agent dimensions differ");
  }
  TrainingResult result;
  ReplayMemory memory(cfg.replay_capacity);
  OuNoise noise(agent.action_dim(), cfg.ou_theta, cfg.ou_sigma, cfg.ou_mu);
  const std::size_t total = cfg.episodes * cfg.steps_per_episode;
  std::size_t global_step = 0;
  double reward_sum = 0.0;
  std::vector<const Transition*> batch;
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    State state = env.reset();
    noise.reset();
    EpisodeRecord record;
    for (std::size_t t = 0; t < cfg.steps_per_episode; ++t, ++global_step) {
      const double progress =
          total > 1 ? static_cast<double>(global_step) / static_cast<double>(total - 1) : 1.0;
      noise.set_sigma(cfg.ou_sigma + (cfg.ou_sigma_final - cfg.ou_sigma) * progress);
      Action action = select_action(agent.actor, state, noise, rng);
      StepOutcome out = env.step(action);
      record.reward += out.reward;
      record.successes += out.successes;
      record.requests += out.requesters;
      State next = out.next_state;
      memory.push({std::move(state), std::move(action), out.reward, std::move(out.next_state)});
      if (memory.size() >= cfg.batch) {
        batch.clear();
        for (std::size_t k : memory.sample_indices(cfg.batch, rng)) batch.push_back(&memory.at(k));
        train_step(agent, batch);
        soft_update(agent);
      }
      state = std::move(next);
    }
    reward_sum += record.reward;
    result.episodes.push_back(record);
    result.cumulative_average.push_back(reward_sum / static_cast<double>(ep + 1));
    if (on_episode) on_episode(ep, record);
  }
  return result;
}

}  // namespace vcache::rl
