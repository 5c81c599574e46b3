#include "vcache/core/model.hpp"

#include <cmath>
#include <string>

#include "vcache/core/error.hpp"

namespace vcache {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void Content::validate() const {
  require_positive(size_bits, "content.size_bits");
  require_positive(cache_bytes, "content.cache_bytes");
  require_positive(deadline_s, "content.deadline_s");
}

std::string_view to_string(Heading h) {
  switch (h) {
    case Heading::north: return "north";
    case Heading::south: return "south";
    case Heading::west: return "west";
    case Heading::east: return "east";
  }
  return "?";
}

Heading opposite(Heading h) {
  switch (h) {
    case Heading::north: return Heading::south;
    case Heading::south: return Heading::north;
    case Heading::west: return Heading::east;
    case Heading::east: return Heading::west;
  }
  return h;
}

Vec2 direction(Heading h) {
  switch (h) {
    case Heading::north: return {0.0, 1.0};
    case Heading::south: return {0.0, -1.0};
    case Heading::west: return {-1.0, 0.0};
    case Heading::east: return {1.0, 0.0};
  }
  return {};
}

void VehicleState::validate() const {
  if (role == Role::provider) {
    require_positive(cache_capacity, "provider cache_capacity");
  } else {
    if (!content) throw InvalidArgument("requester without content");
    content->validate();
  }
  if (wallet < 0.0) throw InvalidArgument("negative wallet balance");
  if (velocity < 0.0) throw InvalidArgument("negative velocity");
}

void ChannelParams::validate() const {
  require_positive(bandwidth_hz, "channel.bandwidth_hz");
  require_positive(tx_power_mw, "channel.tx_power");
  require_positive(channel_gain, "channel.channel_gain");
  require_positive(path_loss_exp, "channel.path_loss_exp");
  require_positive(noise_mw, "channel.noise_mw");
  require_positive(v2v_range_m, "channel.v2v_range_m");
}

void EconomicParams::validate() const {
  require_positive(cache_price, "economics.cache_price");
  require_positive(energy_price, "economics.energy_price");
  if (cache_energy < 0.0) throw InvalidArgument("economics.cache_energy must be >= 0");
  if (!(penalty < 0.0)) throw InvalidArgument("economics.penalty must be negative");
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double data_rate(double distance_m, const ChannelParams& chan) {
  if (distance_m == 0.0) throw DegenerateGeometry("coincident vehicle positions");
  if (distance_m > chan.v2v_range_m) return 0.0;
  const double snr =
      chan.tx_power_mw * chan.channel_gain * std::pow(distance_m, -chan.path_loss_exp) /
      chan.noise_mw;
  return chan.bandwidth_hz * std::log2(1.0 + snr);
}

double data_rate(const VehicleState& requester, const VehicleState& provider,
                 const ChannelParams& chan) {
  return data_rate(distance(requester.position, provider.position), chan);
}

double tx_latency(const Content& content, double rate_bps) {
  if (!(rate_bps > 0.0)) throw Unreachable("zero data rate: latency undefined");
  return content.size_bits / rate_bps;
}

double energy_cost(const Content& content, double rate_bps, const ChannelParams& chan,
                   const EconomicParams& econ) {
  const double tx_joules = chan.tx_power_mw * 1e-3 * tx_latency(content, rate_bps);
  const double cache_joules = econ.cache_energy * content.cache_bytes;
  return econ.energy_price * (tx_joules + cache_joules);
}

double pair_payment(const Content& content, const EconomicParams& econ) {
  return econ.cache_price * content.cache_bytes;
}

}  // namespace vcache
