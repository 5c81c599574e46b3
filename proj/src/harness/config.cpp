#include "vcache/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "vcache/core/error.hpp"

namespace vcache::harness {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads keys out of the tree and remembers which were consumed, so leftovers
/// can be reported as unknown.
class Reader {
 public:
  explicit Reader(const pt::ptree& root) : root_(root) {}

  void real(const std::string& path, double& out) {
    if (auto v = raw(path)) out = parse_real(path, *v);
  }
  void count(const std::string& path, std::size_t& out) {
    if (auto v = raw(path)) out = static_cast<std::size_t>(parse_uint(path, *v));
  }
  void u64(const std::string& path, std::uint64_t& out) {
    if (auto v = raw(path)) out = parse_uint(path, *v);
  }
  void flag(const std::string& path, bool& out) {
    if (auto v = raw(path)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        throw ParseError(path + ": expected a boolean, got '" + *v + "'");
      }
    }
  }
  void text(const std::string& path, std::string& out) {
    if (auto v = raw(path)) out = *v;
  }
  void range(const std::string& section, const std::string& stem, Range& out) {
    real(section + "." + stem + "_min", out.min);
    real(section + "." + stem + "_max", out.max);
  }
  std::optional<std::string> raw(const std::string& path) {
    auto node = root_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
    if (!node) return std::nullopt;
    seen_.insert(path);
    return trim(*node);
  }

  void reject_unknown() const {
    for (const auto& [section, body] : root_) {
      if (body.empty()) {
        throw ParseError(section + ": key outside any section");
      }
      for (const auto& [key, value] : body) {
        const std::string path = section + "." + key;
        if (!seen_.contains(path)) throw ParseError(path + ": unknown key");
      }
    }
  }

  static double parse_real(const std::string& path, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
      throw ParseError(path + ": expected a number, got '" + v + "'");
    }
    return out;
  }

  static std::uint64_t parse_uint(const std::string& path, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
      throw ParseError(path + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
  }

 private:
  const pt::ptree& root_;
  std::set<std::string> seen_;
};

std::vector<std::size_t> parse_hidden(const std::string& path, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<std::size_t>(Reader::parse_uint(path, trim(item))));
  }
  if (out.empty()) throw ParseError(path + ": expected a comma-separated list of widths");
  return out;
}

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw InvalidArgument(path + ": " + what);
}

void check_range(const Range& r, const std::string& path, bool positive) {
  check(r.min <= r.max, path, "minimum exceeds maximum");
  check(positive ? r.min > 0.0 : r.min >= 0.0, path,
        positive ? "must be positive" : "must be non-negative");
}

template <typename Fn>
void rethrow_as(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(section + ": " + e.what());
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  check(requesters > 0, "scenario.requesters", "must be positive");
  check(providers > 0, "scenario.providers", "must be positive");

  rethrow_as("mobility", [&] { mobility.grid.validate(); });
  check_range(mobility.velocity, "mobility.velocity", true);
  check(mobility.slot_seconds > 0.0, "mobility.slot_seconds", "must be positive");
  check(mobility.position_jitter >= 0.0, "mobility.position_jitter", "must be non-negative");
  check(mobility.source == MobilitySource::grid || !mobility.trace_path.empty(),
        "mobility.trace_path", "required when source = trace");

  rethrow_as("channel", [&] { channel.validate(); });
  rethrow_as("economics", [&] { economics.validate(); });

  check_range(content.size_mb, "content.size_mb", true);
  check_range(content.cache_gb, "content.cache_gb", true);
  check_range(content.deadline_s, "content.deadline_s", true);
  check_range(content.capacity_gb, "content.capacity_gb", false);

  rethrow_as("agent", [&] { agent.validate(); });

  check(ledger.initial_coins >= 0.0, "ledger.initial_coins", "must be non-negative");

  rethrow_as("consensus", [&] { consensus.params.validate(consensus.stations); });
  check_range(consensus.cpu_ghz, "consensus.cpu_ghz", true);
  check_range(consensus.block_mb, "consensus.block_mb", false);
  check_range(consensus.result_mb, "consensus.result_mb", false);
  check_range(consensus.audit_kb, "consensus.audit_kb", false);
}

ScenarioConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  ScenarioConfig c;
  Reader r(tree);

  r.count("scenario.requesters", c.requesters);
  r.count("scenario.providers", c.providers);
  r.u64("scenario.seed", c.seed);

  if (auto v = r.raw("mobility.source")) {
    if (*v == "grid") {
      c.mobility.source = MobilitySource::grid;
    } else if (*v == "trace") {
      c.mobility.source = MobilitySource::trace;
    } else {
      throw ParseError("mobility.source: expected grid or trace, got '" + *v + "'");
    }
  }
  r.text("mobility.trace_path", c.mobility.trace_path);
  {
    mobility::GeoBox& b = c.mobility.bbox;
    r.real("mobility.lat_min", b.lat_min);
    r.real("mobility.lat_max", b.lat_max);
    r.real("mobility.lon_min", b.lon_min);
    r.real("mobility.lon_max", b.lon_max);
    b = mobility::GeoBox::from_corners(b.lat_min, b.lat_max, b.lon_min, b.lon_max);
  }
  auto& g = c.mobility.grid;
  r.real("mobility.intersection_density", g.intersection_density);
  r.real("mobility.wait_time", g.wait_time);
  r.real("mobility.wait_prob", g.wait_prob);
  r.real("mobility.block_size", g.block_size);
  r.real("mobility.width", g.width);
  r.real("mobility.height", g.height);
  r.real("mobility.turn_straight", g.turns.straight);
  r.real("mobility.turn_left", g.turns.left);
  r.real("mobility.turn_right", g.turns.right);
  r.range("mobility", "velocity", c.mobility.velocity);
  r.real("mobility.slot_seconds", c.mobility.slot_seconds);
  r.real("mobility.position_jitter", c.mobility.position_jitter);

  r.real("channel.bandwidth_hz", c.channel.bandwidth_hz);
  if (auto v = r.raw("channel.tx_power_dbm")) {
    c.channel.tx_power_mw = dbm_to_mw(Reader::parse_real("channel.tx_power_dbm", *v));
  }
  r.real("channel.channel_gain", c.channel.channel_gain);
  r.real("channel.path_loss_exp", c.channel.path_loss_exp);
  r.real("channel.noise_mw", c.channel.noise_mw);
  r.real("channel.range_m", c.channel.v2v_range_m);

  r.real("economics.cache_price", c.economics.cache_price);
  r.real("economics.energy_price", c.economics.energy_price);
  r.real("economics.cache_energy", c.economics.cache_energy);
  r.real("economics.penalty", c.economics.penalty);

  r.range("content", "size_mb", c.content.size_mb);
  r.range("content", "cache_gb", c.content.cache_gb);
  r.range("content", "deadline_s", c.content.deadline_s);
  r.range("content", "capacity_gb", c.content.capacity_gb);

  auto& a = c.agent;
  r.real("agent.actor_lr", a.actor_lr);
  r.real("agent.critic_lr", a.critic_lr);
  r.real("agent.discount", a.discount);
  r.real("agent.soft_update", a.soft_update);
  r.count("agent.batch", a.batch);
  r.count("agent.episodes", a.episodes);
  r.count("agent.steps", a.steps_per_episode);
  if (auto v = r.raw("agent.hidden")) a.hidden = parse_hidden("agent.hidden", *v);
  r.count("agent.replay_capacity", a.replay_capacity);
  r.real("agent.ou_theta", a.ou_theta);
  r.real("agent.ou_sigma", a.ou_sigma);
  r.real("agent.ou_sigma_final", a.ou_sigma_final);
  r.real("agent.ou_mu", a.ou_mu);
  if (auto v = r.raw("agent.optimizer")) {
    if (*v == "sgd") {
      a.optimizer = rl::OptimizerKind::sgd;
    } else if (*v == "adam") {
      a.optimizer = rl::OptimizerKind::adam;
    } else {
      throw ParseError("agent.optimizer: expected sgd or adam, got '" + *v + "'");
    }
  }
  r.real("agent.adam_beta1", a.adam_beta1);
  r.real("agent.adam_beta2", a.adam_beta2);
  r.real("agent.adam_eps", a.adam_eps);
  r.real("agent.reward_scale", a.reward_scale);
  a.penalty = c.economics.penalty;
  r.flag("agent.repair", c.repair);

  r.flag("ledger.enabled", c.ledger.enabled);
  r.real("ledger.initial_coins", c.ledger.initial_coins);

  auto& cp = c.consensus.params;
  r.count("consensus.stations", c.consensus.stations);
  r.count("consensus.commission_size", cp.commission_size);
  r.real("consensus.wired_rate", cp.wired_rate);
  r.real("consensus.hash_delay", cp.hash_delay);
  r.real("consensus.cycles_per_bit", cp.cycles_per_bit);
  r.count("consensus.max_txs", cp.max_txs);
  r.real("consensus.default_deadline", cp.default_deadline);
  r.range("consensus", "cpu_ghz", c.consensus.cpu_ghz);
  r.range("consensus", "block_mb", c.consensus.block_mb);
  r.range("consensus", "result_mb", c.consensus.result_mb);
  r.range("consensus", "audit_kb", c.consensus.audit_kb);

  r.reject_unknown();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_config(in);
}

namespace {

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void put_range(std::ostream& o, const std::string& stem, const Range& r) {
  o << stem << "_min = " << num(r.min) << "\n" << stem << "_max = " << num(r.max) << "\n";
}

}  // namespace

std::string to_ini(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "[scenario]\n"
    << "requesters = " << c.requesters << "\n"
    << "providers = " << c.providers << "\n"
    << "seed = " << c.seed << "\n\n";

  const auto& m = c.mobility;
  o << "[mobility]\n"
    << "source = " << (m.source == MobilitySource::grid ? "grid" : "trace") << "\n";
  if (!m.trace_path.empty()) o << "trace_path = " << m.trace_path << "\n";
  o << "lat_min = " << num(m.bbox.lat_min) << "\n"
    << "lat_max = " << num(m.bbox.lat_max) << "\n"
    << "lon_min = " << num(m.bbox.lon_min) << "\n"
    << "lon_max = " << num(m.bbox.lon_max) << "\n"
    << "intersection_density = " << num(m.grid.intersection_density) << "\n"
    << "wait_time = " << num(m.grid.wait_time) << "\n"
    << "wait_prob = " << num(m.grid.wait_prob) << "\n"
    << "block_size = " << num(m.grid.block_size) << "\n"
    << "width = " << num(m.grid.width) << "\n"
    << "height = " << num(m.grid.height) << "\n"
    << "turn_straight = " << num(m.grid.turns.straight) << "\n"
    << "turn_left = " << num(m.grid.turns.left) << "\n"
    << "turn_right = " << num(m.grid.turns.right) << "\n";
  put_range(o, "velocity", m.velocity);
  o << "slot_seconds = " << num(m.slot_seconds) << "\n"
    << "position_jitter = " << num(m.position_jitter) << "\n\n";

  o << "[channel]\n"
    << "bandwidth_hz = " << num(c.channel.bandwidth_hz) << "\n"
    << "tx_power_dbm = " << num(10.0 * std::log10(c.channel.tx_power_mw)) << "\n"
    << "channel_gain = " << num(c.channel.channel_gain) << "\n"
    << "path_loss_exp = " << num(c.channel.path_loss_exp) << "\n"
    << "noise_mw = " << num(c.channel.noise_mw) << "\n"
    << "range_m = " << num(c.channel.v2v_range_m) << "\n\n";

  o << "[economics]\n"
    << "cache_price = " << num(c.economics.cache_price) << "\n"
    << "energy_price = " << num(c.economics.energy_price) << "\n"
    << "cache_energy = " << num(c.economics.cache_energy) << "\n"
    << "penalty = " << num(c.economics.penalty) << "\n\n";

  o << "[content]\n";
  put_range(o, "size_mb", c.content.size_mb);
  put_range(o, "cache_gb", c.content.cache_gb);
  put_range(o, "deadline_s", c.content.deadline_s);
  put_range(o, "capacity_gb", c.content.capacity_gb);
  o << "\n";

  const auto& a = c.agent;
  o << "[agent]\n"
    << "actor_lr = " << num(a.actor_lr) << "\n"
    << "critic_lr = " << num(a.critic_lr) << "\n"
    << "discount = " << num(a.discount) << "\n"
    << "soft_update = " << num(a.soft_update) << "\n"
    << "batch = " << a.batch << "\n"
    << "episodes = " << a.episodes << "\n"
    << "steps = " << a.steps_per_episode << "\n"
    << "hidden = ";
  for (std::size_t k = 0; k < a.hidden.size(); ++k) o << (k ? "," : "") << a.hidden[k];
  o << "\n"
    << "replay_capacity = " << a.replay_capacity << "\n"
    << "ou_theta = " << num(a.ou_theta) << "\n"
    << "ou_sigma = " << num(a.ou_sigma) << "\n"
    << "ou_sigma_final = " << num(a.ou_sigma_final) << "\n"
    << "ou_mu = " << num(a.ou_mu) << "\n"
    << "optimizer = " << (a.optimizer == rl::OptimizerKind::sgd ? "sgd" : "adam") << "\n"
    << "adam_beta1 = " << num(a.adam_beta1) << "\n"
    << "adam_beta2 = " << num(a.adam_beta2) << "\n"
    << "adam_eps = " << num(a.adam_eps) << "\n"
    << "reward_scale = " << num(a.reward_scale) << "\n"
    << "repair = " << (c.repair ? "true" : "false") << "\n\n";

  o << "[ledger]\n"
    << "enabled = " << (c.ledger.enabled ? "true" : "false") << "\n"
    << "initial_coins = " << num(c.ledger.initial_coins) << "\n\n";

  const auto& cp = c.consensus.params;
  o << "[consensus]\n"
    << "stations = " << c.consensus.stations << "\n"
    << "commission_size = " << cp.commission_size << "\n"
    << "wired_rate = " << num(cp.wired_rate) << "\n"
    << "hash_delay = " << num(cp.hash_delay) << "\n"
    << "cycles_per_bit = " << num(cp.cycles_per_bit) << "\n"
    << "max_txs = " << cp.max_txs << "\n"
    << "default_deadline = " << num(cp.default_deadline) << "\n";
  put_range(o, "cpu_ghz", c.consensus.cpu_ghz);
  put_range(o, "block_mb", c.consensus.block_mb);
  put_range(o, "result_mb", c.consensus.result_mb);
  put_range(o, "audit_kb", c.consensus.audit_kb);
  return o.str();
}

}  // namespace vcache::harness
