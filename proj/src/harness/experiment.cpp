#include "vcache/harness/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numbers>
#include <ostream>
#include <sstream>
#include <utility>

#include "vcache/core/error.hpp"
#include "vcache/mobility/grid.hpp"
#include "vcache/refine/bipartite.hpp"

namespace vcache::harness {

namespace {

constexpr double kBytesPerGb = 1e9;

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double mid(const Range& r) { return 0.5 * (r.min + r.max); }

}  // namespace

Policy parse_policy(const std::string& s) {
  if (s == "drl") return Policy::drl;
  if (s == "gcc") return Policy::gcc;
  if (s == "rcc") return Policy::rcc;
  throw InvalidArgument("unknown policy '" + s + "' (expected drl, gcc or rcc)");
}

const char* to_string(Policy p) {
  switch (p) {
    case Policy::drl: return "drl";
    case Policy::gcc: return "gcc";
    case Policy::rcc: return "rcc";
  }
  return "unknown";
}

// --- LedgerRuntime --------------------------------------------------------

LedgerRuntime::LedgerRuntime(const ScenarioConfig& cfg, Rng& rng)
    : cfg_(cfg), rng_(rng.fork()), ca_(rng_) {
  const std::int64_t mint = ledger::to_units(cfg.ledger.initial_coins);
  auto enrol = [&](std::vector<ledger::Identity>& out, std::size_t n, const char* role) {
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(ca_.issue(std::string(role) + "-" + std::to_string(k), rng_));
      wallets_.mint(out.back().wallet(), mint);
      minted_ += mint;
    }
  };
  enrol(requesters_, cfg.requesters, "requester");
  enrol(providers_, cfg.providers, "provider");

  const auto& cc = cfg.consensus;
  std::vector<consensus::BaseStation> stations;
  stations.reserve(cc.stations);
  for (std::size_t m = 0; m < cc.stations; ++m) {
    consensus::BaseStation bs;
    bs.id = static_cast<std::uint32_t>(m);
    bs.node.position = {rng_.uniform(0.0, cfg.mobility.grid.width),
                        rng_.uniform(0.0, cfg.mobility.grid.height)};
    bs.node.cpu_hz = cc.cpu_ghz.draw(rng_) * 1e9;
    bs.identity = ca_.issue("station-" + std::to_string(m), rng_);
    stations.push_back(std::move(bs));
  }
  ledger::Chain chain(stations.front().identity.keys, 0.0, cc.params.max_txs);
  engine_ = std::make_unique<consensus::ConsensusEngine>(std::move(stations), cc.params,
                                                         std::move(chain), rng_.fork());
}

LedgerRuntime::StepRecord LedgerRuntime::record(const caching::CachingProblem& problem,
                                                const caching::Assignment& a,
                                                const std::vector<bool>& success, double now) {
  StepRecord rec;
  const std::size_t I = problem.requester_count();
  const std::size_t P = problem.provider_count();

  // Phase 1: requests and adverts reach the serving station, which checks
  // them as one batch.
  std::vector<ledger::SignedItem> batch;
  batch.reserve(I + P);
  for (std::size_t i = 0; i < I; ++i) {
    const auto& r = problem.requesters()[i];
    const auto msg =
        ledger::CachingRequest::make(requesters_[i], r.content.cache_bytes, r.position, now);
    batch.push_back(ledger::signed_item(msg));
  }
  for (std::size_t p = 0; p < P; ++p) {
    const auto& pr = problem.providers()[p];
    const auto msg =
        ledger::ResourceAdvert::make(providers_[p], pr.capacity_bytes, pr.position, now);
    batch.push_back(ledger::signed_item(msg));
  }
  if (!ledger::batch_verify(batch)) throw ledger::LedgerError("batch verification failed");

  // Phase 2: responses and contracts for every successful pair.
  const auto& bs = engine_->stations().front().identity.keys;
  for (std::size_t i = 0; i < I; ++i) {
    if (!success[i]) continue;
    const auto& content = problem.requesters()[i].content;
    for (std::size_t p = 0; p < P; ++p) {
      if (!a(i, p)) continue;
      const auto& pr = problem.providers()[p];
      const ledger::ChannelInfo chan{problem.rates()(i, p),
                                     distance(problem.requesters()[i].position, pr.position)};
      const auto resp =
          ledger::respond(bs, content.cache_bytes, providers_[p].pk(), pr.position, chan, now);
      try {
        auto out = ledger::execute_contract(resp.to_requester, resp.to_provider, bs.pk,
                                            requesters_[i], content.size_bits,
                                            problem.economics().cache_price, wallets_, now);
        ++rec.contracts;
        ++contracts_;
        const double latency = problem.latencies()(i, p);
        voters_.push_back({requesters_[i].wallet(), out.tx.coins, latency, content.deadline_s});
        engine_->submit({std::move(out.tx), latency, content.deadline_s});
      } catch (const ledger::ContractError&) {
        ++rec.aborted;
      }
    }
  }

  // Phase 3: consensus whenever a full block is waiting.
  const auto& cc = cfg_.consensus;
  while (engine_->pending() >= cc.params.max_txs) {
    engine_->set_message_sizes(cc.block_mb.draw(rng_) * consensus::kMegabyteBits,
                               cc.result_mb.draw(rng_) * consensus::kMegabyteBits,
                               cc.audit_kb.draw(rng_) * consensus::kKilobyteBits);
    auto report = engine_->run_round();
    end_epoch_if_due(report);
    rec.rounds.push_back(std::move(report));
  }
  return rec;
}

void LedgerRuntime::end_epoch_if_due(const consensus::RoundReport& r) {
  if (!r.rotation_complete || voters_.empty()) return;
  const auto votes = consensus::cast_votes(voters_, engine_->stations(), engine_->params());
  engine_->elect(votes);
  voters_.clear();
}

// --- CachingEnvironment ---------------------------------------------------

CachingEnvironment::CachingEnvironment(const ScenarioConfig& cfg, const mobility::Trace* trace)
    : cfg_(cfg), trace_(trace) {
  cfg.validate();
  const auto& cc = cfg.content;
  const double max_cache = cc.cache_gb.max * kBytesPerGb;
  const double max_capacity = std::max(cc.capacity_gb.max * kBytesPerGb, 1.0);
  const double max_energy =
      cfg.economics.energy_price * (cfg.channel.tx_power_mw * 1e-3 * cc.deadline_s.max +
                                    cfg.economics.cache_energy * max_cache);
  scales_ = rl::StateScales::for_channel(cfg.channel, max_cache, cc.deadline_s.max, max_capacity,
                                         max_energy);

  if (cfg.mobility.source == MobilitySource::trace) {
    if (trace_ == nullptr) throw InvalidArgument("trace mobility selected but no trace given");
    trace_ids_ = trace_->vehicle_ids();
    if (trace_ids_.size() < cfg.requesters + cfg.providers) {
      throw InvalidArgument("trace holds " + std::to_string(trace_ids_.size()) +
                            " vehicles, scenario needs " +
                            std::to_string(cfg.requesters + cfg.providers));
    }
    episode_start_ = trace_->start_time();
  }

  Rng root(cfg.seed);
  if (cfg.ledger.enabled) ledger_ = std::make_unique<LedgerRuntime>(cfg, root);
}

CachingEnvironment::~CachingEnvironment() = default;

std::size_t CachingEnvironment::state_size() const {
  return rl::state_size(cfg_.requesters, cfg_.providers);
}

std::size_t CachingEnvironment::action_size() const {
  return cfg_.requesters * cfg_.providers;
}

namespace {

Heading heading_of(Vec2 from, Vec2 to, Heading fallback) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) return fallback;
  if (std::abs(dx) >= std::abs(dy)) return dx > 0.0 ? Heading::east : Heading::west;
  return dy > 0.0 ? Heading::north : Heading::south;
}

}  // namespace

rl::State CachingEnvironment::reset() {
  // Every episode replays the same vehicles and the same mobility stream.
  Rng place(cfg_.seed ^ 0x9D2C5680A3B1E44FULL);
  const std::size_t n = cfg_.requesters + cfg_.providers;
  vehicles_.assign(n, {});
  jitter_.assign(n, {});
  const auto& cc = cfg_.content;
  for (std::size_t k = 0; k < n; ++k) {
    VehicleState& v = vehicles_[k];
    v.id = static_cast<std::uint32_t>(k);
    if (cfg_.mobility.source == MobilitySource::grid) {
      const auto pl = mobility::random_placement(cfg_.mobility.grid, place);
      v.position = pl.position;
      v.heading = pl.heading;
    }
    v.velocity = cfg_.mobility.velocity.draw(place);
    if (k < cfg_.requesters) {
      v.role = Role::requester;
      Content c;
      c.size_bits = cc.size_mb.draw(place) * consensus::kMegabyteBits;
      c.cache_bytes = cc.cache_gb.draw(place) * kBytesPerGb;
      c.deadline_s = cc.deadline_s.draw(place);
      v.content = c;
    } else {
      v.role = Role::provider;
      v.cache_capacity = cc.capacity_gb.draw(place) * kBytesPerGb;
    }
    const double j = cfg_.mobility.position_jitter;
    jitter_[k] = {place.uniform(-j, j), place.uniform(-j, j)};
  }
  mobility_rng_ = Rng(place.next_u64());
  episode_time_ = episode_start_;
  build_problem();
  return rl::assemble_state(*problem_, scales_);
}

void CachingEnvironment::build_problem() {
  const std::size_t n = vehicles_.size();
  if (cfg_.mobility.source == MobilitySource::trace) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& id = trace_ids_[k];
      const Vec2 here = trace_->position(id, episode_time_);
      const Vec2 ahead = trace_->position(id, episode_time_ + cfg_.mobility.slot_seconds);
      vehicles_[k].position = here;
      vehicles_[k].heading = heading_of(here, ahead, vehicles_[k].heading);
    }
  }
  std::vector<caching::Requester> reqs;
  std::vector<caching::Provider> provs;
  reqs.reserve(cfg_.requesters);
  provs.reserve(cfg_.providers);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& v = vehicles_[k];
    const Vec2 pos{v.position.x + jitter_[k].x, v.position.y + jitter_[k].y};
    if (v.role == Role::requester) {
      reqs.push_back({*v.content, pos, v.heading});
    } else {
      provs.push_back({v.cache_capacity, pos, v.heading});
    }
  }
  problem_ = caching::CachingProblem::build(std::move(reqs), std::move(provs), cfg_.channel,
                                            cfg_.economics);
}

void CachingEnvironment::advance() {
  const double dt = cfg_.mobility.slot_seconds;
  if (cfg_.mobility.source == MobilitySource::grid) {
    for (auto& v : vehicles_) v = mobility::step(v, cfg_.mobility.grid, dt, mobility_rng_);
  }
  episode_time_ += dt;
  now_ += dt;
}

rl::StepOutcome CachingEnvironment::step(std::span<const double> action) {
  auto a = refine::refine(action, *problem_);
  if (cfg_.repair) a = refine::repair_feasibility(*problem_, std::move(a));
  return apply(a);
}

rl::StepOutcome CachingEnvironment::apply(const caching::Assignment& a) {
  if (!problem_) throw InvalidArgument("environment used before reset");
  rl::StepOutcome out;
  out.reward = rl::reward(*problem_, a, cfg_.agent);
  const auto success = caching::successful_requesters(*problem_, a);
  out.successes = static_cast<std::size_t>(std::count(success.begin(), success.end(), true));
  out.requesters = problem_->requester_count();
  if (ledger_) {
    auto rec = ledger_->record(*problem_, a, success, now_);
    for (auto& r : rec.rounds) rounds_.push_back(std::move(r));
  }
  advance();
  build_problem();
  out.next_state = rl::assemble_state(*problem_, scales_);
  return out;
}

std::vector<consensus::RoundReport> CachingEnvironment::take_rounds() {
  return std::exchange(rounds_, {});
}

// --- Metrics --------------------------------------------------------------

void MetricSeries::write_csv(std::ostream& out) const {
  out << "episode,reward,cumulative_average,success_pct,successes,requests\n";
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const auto& e = episodes[k];
    out << k << ',' << num(e.reward) << ',' << num(e.cumulative_average) << ','
        << num(e.success_pct) << ',' << e.successes << ',' << e.requests << '\n';
  }
}

void MetricSeries::write_rounds(std::ostream& out) const {
  for (const auto& r : rounds) out << r.to_json().dump() << '\n';
}

namespace {

class Collector {
 public:
  explicit Collector(MetricSeries& m) : m_(m) {}

  void episode(double reward, std::size_t successes, std::size_t requests) {
    sum_ += reward;
    EpisodeMetrics e;
    e.reward = reward;
    e.cumulative_average = sum_ / static_cast<double>(m_.episodes.size() + 1);
    e.successes = successes;
    e.requests = requests;
    e.success_pct = requests == 0 ? 0.0
                                  : 100.0 * static_cast<double>(successes) /
                                        static_cast<double>(requests);
    m_.episodes.push_back(e);
  }

  void rounds(std::vector<consensus::RoundReport> rs) {
    for (auto& r : rs) {
      if (r.accepted) m_.block_utilities.push_back(r.utility_per_bs.at(r.leader));
      m_.rounds.push_back(std::move(r));
    }
  }

 private:
  MetricSeries& m_;
  double sum_ = 0.0;
};

void finish(CachingEnvironment& env, ExperimentResult& result) {
  if (auto* l = env.ledger()) {
    result.chain = l->chain();
    result.contracts = l->contracts_executed();
  }
}

}  // namespace

std::optional<mobility::Trace> load_trace(const ScenarioConfig& cfg) {
  if (cfg.mobility.source != MobilitySource::trace) return std::nullopt;
  return mobility::ingest_trace(cfg.mobility.trace_path, cfg.mobility.bbox);
}

ExperimentResult run_experiment(const ScenarioConfig& cfg, Policy policy,
                                const rl::Agent* pretrained) {
  const auto trace = load_trace(cfg);
  CachingEnvironment env(cfg, trace ? &*trace : nullptr);
  ExperimentResult result;
  Collector collect(result.metrics);
  Rng rng = Rng(cfg.seed).fork().fork();

  if (policy == Policy::drl && pretrained == nullptr) {
    rl::Agent agent = rl::Agent::create(env.state_size(), env.action_size(), cfg.agent, rng);
    rl::run_training(env, agent, rng, [&](std::size_t, const rl::EpisodeRecord& rec) {
      collect.episode(rec.reward, rec.successes, rec.requests);
      collect.rounds(env.take_rounds());
    });
    result.agent = std::move(agent);
    finish(env, result);
    return result;
  }

  for (std::size_t ep = 0; ep < cfg.agent.episodes; ++ep) {
    rl::State state = env.reset();
    double reward = 0.0;
    std::size_t successes = 0;
    std::size_t requests = 0;
    for (std::size_t t = 0; t < cfg.agent.steps_per_episode; ++t) {
      rl::StepOutcome out;
      switch (policy) {
        case Policy::drl:
          out = env.step(pretrained->actor.forward(std::span<const double>(state)));
          break;
        case Policy::gcc:
          out = env.apply(caching::gcc(env.problem()));
          break;
        case Policy::rcc:
          out = env.apply(caching::rcc(env.problem(), rng));
          break;
      }
      reward += out.reward;
      successes += out.successes;
      requests += out.requesters;
      state = std::move(out.next_state);
    }
    collect.episode(reward, successes, requests);
    collect.rounds(env.take_rounds());
  }
  finish(env, result);
  return result;
}

std::filesystem::path make_run_dir(const std::filesystem::path& root, std::uint64_t seed) {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const std::string base = std::string("run-") + stamp + "-seed" + std::to_string(seed);
  std::filesystem::path dir = root / base;
  for (int k = 1; std::filesystem::exists(dir); ++k) {
    dir = root / (base + "-" + std::to_string(k));
  }
  std::filesystem::create_directories(dir);
  return dir;
}

// --- Sweeps ---------------------------------------------------------------

SweepAxis parse_axis(const std::string& s) {
  if (s == "requesters") return SweepAxis::requesters;
  if (s == "block_size") return SweepAxis::block_size;
  if (s == "leader_distance") return SweepAxis::leader_distance;
  throw InvalidArgument("unknown sweep axis '" + s +
                        "' (expected requesters, block_size or leader_distance)");
}

double commission_utility(const consensus::ConsensusParams& p, std::size_t n, double spacing,
                          double cpu_hz, double transmission, double tau) {
  if (n < 3) throw InvalidArgument("a commission has at least three members");
  const double radius = spacing / (2.0 * std::sin(std::numbers::pi / static_cast<double>(n)));
  std::vector<consensus::Node> nodes(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    nodes[k] = {{radius * std::cos(angle), radius * std::sin(angle)}, cpu_hz};
  }
  const std::span<const consensus::Node> verifiers(nodes.data() + 1, n - 1);
  return consensus::utility(consensus::block_time(nodes[0], verifiers, p, transmission).total(),
                            tau);
}

namespace {

/// Consensus parameters at the midpoints of the configured ranges.
consensus::ConsensusParams midpoint_params(const ScenarioConfig& cfg) {
  auto p = cfg.consensus.params;
  p.block_bits = mid(cfg.consensus.block_mb) * consensus::kMegabyteBits;
  p.result_bits = mid(cfg.consensus.result_mb) * consensus::kMegabyteBits;
  p.audit_bits = mid(cfg.consensus.audit_kb) * consensus::kKilobyteBits;
  return p;
}

/// Transmission time of a midpoint-sized content over half the V2V range.
double reference_transmission(const ScenarioConfig& cfg) {
  const double rate = data_rate(0.5 * cfg.channel.v2v_range_m, cfg.channel);
  return mid(cfg.content.size_mb) * consensus::kMegabyteBits / rate;
}

}  // namespace

void sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values,
           Policy policy, std::ostream& out) {
  if (axis == SweepAxis::requesters) {
    out << "requesters,policy,final_cumulative_average,mean_success_pct\n";
    for (double v : values) {
      if (v < 1.0 || v != std::floor(v)) throw InvalidArgument("requester counts are integers");
      ScenarioConfig c = cfg;
      c.requesters = static_cast<std::size_t>(v);
      const auto res = run_experiment(c, policy);
      const auto& eps = res.metrics.episodes;
      double success = 0.0;
      for (const auto& e : eps) success += e.success_pct;
      const double final_avg = eps.empty() ? 0.0 : eps.back().cumulative_average;
      const double mean_success = eps.empty() ? 0.0 : success / static_cast<double>(eps.size());
      out << c.requesters << ',' << to_string(policy) << ',' << num(final_avg) << ','
          << num(mean_success) << '\n';
    }
    return;
  }

  auto p = midpoint_params(cfg);
  const std::size_t n = p.commission_size;
  const double cpu = mid(cfg.consensus.cpu_ghz) * 1e9;
  const double tip = reference_transmission(cfg);
  const double tau = mid(cfg.content.deadline_s);
  const double spacing = 500.0;
  if (axis == SweepAxis::block_size) {
    out << "block_mb,utility\n";
    for (double v : values) {
      p.block_bits = v * consensus::kMegabyteBits;
      out << num(v) << ',' << num(commission_utility(p, n, spacing, cpu, tip, tau)) << '\n';
    }
  } else {
    out << "spacing_m,utility\n";
    for (double v : values) {
      out << num(v) << ',' << num(commission_utility(p, n, v, cpu, tip, tau)) << '\n';
    }
  }
}

// --- Synthetic trace ------------------------------------------------------

std::vector<mobility::TraceRecord> generate_synthetic_trace(const ScenarioConfig& cfg,
                                                            std::size_t vehicles,
                                                            std::size_t steps) {
  const auto& g = cfg.mobility.grid;
  g.validate();
  const auto& box = cfg.mobility.bbox;
  const Vec2 ext = box.extent_m();
  Rng rng(cfg.seed);
  std::vector<VehicleState> fleet(vehicles);
  for (std::size_t k = 0; k < vehicles; ++k) {
    const auto pl = mobility::random_placement(g, rng);
    fleet[k].id = static_cast<std::uint32_t>(k);
    fleet[k].position = pl.position;
    fleet[k].heading = pl.heading;
    fleet[k].velocity = cfg.mobility.velocity.draw(rng);
  }
  std::vector<mobility::TraceRecord> out;
  out.reserve(vehicles * (steps + 1));
  for (std::size_t t = 0; t <= steps; ++t) {
    const double ts = static_cast<double>(t) * cfg.mobility.slot_seconds;
    for (const auto& v : fleet) {
      // Shrink slightly so points on the map edge stay strictly inside.
      const Vec2 local{(v.position.x / g.width - 0.5) * ext.x * (1.0 - 1e-9),
                       (v.position.y / g.height - 0.5) * ext.y * (1.0 - 1e-9)};
      const auto [lat, lon] = mobility::unproject(local, box);
      char id[16];
      std::snprintf(id, sizeof id, "v%04u", v.id);
      out.push_back({ts, id, lat, lon});
    }
    if (t == steps) break;
    for (auto& v : fleet) v = mobility::step(v, g, cfg.mobility.slot_seconds, rng);
  }
  return out;
}

}  // namespace vcache::harness
