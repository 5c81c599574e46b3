#pragma once

// Shared vocabulary: vehicles, contents, radio and price parameters, and the
// per-pair rate / latency / energy / payment formulas.
//
// Units are fixed: cache quantities in bytes, transmitted payloads in bits,
// time in seconds, power in mW, distance in meters, money in coins.

#include <cstdint>
#include <optional>
#include <string_view>

namespace vcache {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

struct Content {
  double size_bits = 0.0;    // payload pushed over the V2V link
  double cache_bytes = 0.0;  // cache space the payload occupies at the provider
  double deadline_s = 0.0;   // maximal delivery latency

  void validate() const;
};

enum class Role : std::uint8_t { requester, provider };

enum class Heading : std::uint8_t { north = 0, south = 1, west = 2, east = 3 };

inline constexpr int kHeadingCount = 4;

std::string_view to_string(Heading h);
Heading opposite(Heading h);
/// Unit displacement of a heading; north is +y, east is +x.
Vec2 direction(Heading h);

struct VehicleState {
  std::uint32_t id = 0;
  Role role = Role::requester;
  Vec2 position;
  Heading heading = Heading::east;
  double velocity = 0.0;        // m/s, constant per episode
  double cache_capacity = 0.0;  // bytes; providers only
  std::optional<Content> content;  // requesters only
  double wallet = 0.0;
  double wait_remaining = 0.0;  // seconds left holding at an intersection

  void validate() const;
};

struct ChannelParams {
  double bandwidth_hz = 10e6;
  double tx_power_mw = 251.18864315095797;  // 24 dBm
  double channel_gain = 1.0;
  double path_loss_exp = 2.0;
  double noise_mw = 1e-11;
  double v2v_range_m = 500.0;

  void validate() const;
};

struct EconomicParams {
  double cache_price = 2e-9;    // coins per byte
  double energy_price = 0.1;    // coins per Joule
  double cache_energy = 1e-9;   // Joules per byte cached
  double penalty = -100.0;      // reward for a constraint-violating assignment

  void validate() const;
};

double dbm_to_mw(double dbm);

/// Shannon rate over a path-loss channel; 0 beyond the V2V range.
/// Throws DegenerateGeometry for coincident endpoints.
double data_rate(double distance_m, const ChannelParams& chan);
double data_rate(const VehicleState& requester, const VehicleState& provider,
                 const ChannelParams& chan);

/// Seconds to push the content payload at `rate_bps`. Throws Unreachable if
/// the rate is not positive.
double tx_latency(const Content& content, double rate_bps);

/// Priced transmission plus caching energy, in coins.
double energy_cost(const Content& content, double rate_bps, const ChannelParams& chan,
                   const EconomicParams& econ);

/// What a requester pays its provider when the pair is selected.
double pair_payment(const Content& content, const EconomicParams& econ);

}  // namespace vcache
