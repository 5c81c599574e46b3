#include "vcache/mobility/grid.hpp"

#include <array>
#include <cmath>

#include "vcache/core/error.hpp"

namespace vcache::mobility {

namespace {

constexpr double kSnap = 1e-9;

bool is_multiple(double v, double step, double tol) {
  const double k = std::round(v / step);
  return std::abs(v - k * step) <= tol;
}

bool horizontal(Heading h) { return h == Heading::east || h == Heading::west; }

Heading left_of(Heading h) {
  switch (h) {
    case Heading::north: return Heading::west;
    case Heading::south: return Heading::east;
    case Heading::west: return Heading::south;
    case Heading::east: return Heading::north;
  }
  return h;
}

double stop_load(const GridParams& g, double velocity) {
  if (!(velocity > 0.0)) throw InvalidArgument("velocity must be positive");
  return g.wait_time * g.wait_prob * g.intersection_density * velocity;
}

// True if leaving intersection `p` along `h` keeps the vehicle on the map.
bool can_leave(Vec2 p, Heading h, const GridParams& g) {
  switch (h) {
    case Heading::north: return p.y + kSnap < g.height;
    case Heading::south: return p.y - kSnap > 0.0;
    case Heading::west: return p.x - kSnap > 0.0;
    case Heading::east: return p.x + kSnap < g.width;
  }
  return false;
}

Heading choose_heading(Vec2 p, Heading current, const GridParams& g, double u) {
  const std::array<Heading, 3> options{current, left_of(current), opposite(left_of(current))};
  const std::array<double, 3> weights{g.turns.straight, g.turns.left, g.turns.right};
  double total = 0.0;
  std::array<double, 3> legal{};
  for (int k = 0; k < 3; ++k) {
    legal[k] = can_leave(p, options[k], g) ? weights[k] : 0.0;
    total += legal[k];
  }
  if (total <= 0.0) return opposite(current);
  double acc = 0.0;
  const double target = u * total;
  for (int k = 0; k < 3; ++k) {
    acc += legal[k];
    if (legal[k] > 0.0 && target < acc) return options[k];
  }
  for (int k = 2; k >= 0; --k) {
    if (legal[k] > 0.0) return options[k];
  }
  return opposite(current);
}

}  // namespace

void GridParams::validate() const {
  if (!(intersection_density > 0.0)) throw InvalidArgument("grid.intersection_density must be > 0");
  if (wait_time < 0.0) throw InvalidArgument("grid.wait_time must be >= 0");
  if (wait_prob < 0.0 || wait_prob > 1.0) throw InvalidArgument("grid.wait_prob must be in [0,1]");
  if (!(block_size > 0.0)) throw InvalidArgument("grid.block_size must be > 0");
  if (std::abs(1.0 / intersection_density - block_size) > 0.01 * block_size) {
    throw InvalidArgument("grid.intersection_density inconsistent with grid.block_size");
  }
  if (!(width >= block_size) || !(height >= block_size) || !is_multiple(width, block_size, 1e-6) ||
      !is_multiple(height, block_size, 1e-6)) {
    throw InvalidArgument("grid extent must be a positive multiple of grid.block_size");
  }
  if (turns.straight < 0.0 || turns.left < 0.0 || turns.right < 0.0 ||
      turns.straight + turns.left + turns.right <= 0.0) {
    throw InvalidArgument("grid turn weights must be non-negative with positive sum");
  }
}

double move_probability(const GridParams& g, double velocity) {
  return 2.0 / (2.0 + stop_load(g, velocity));
}

double stop_probability(const GridParams& g, double velocity) {
  const double load = stop_load(g, velocity);
  return load / (2.0 + load);
}

bool on_grid(Vec2 p, const GridParams& g, double tol) {
  if (p.x < -tol || p.y < -tol || p.x > g.width + tol || p.y > g.height + tol) return false;
  return is_multiple(p.x, g.block_size, tol) || is_multiple(p.y, g.block_size, tol);
}

VehicleState step(VehicleState s, const GridParams& g, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("step dt must be positive");
  if (s.velocity == 0.0) return s;
  if (s.velocity < 0.0) throw InvalidArgument("negative velocity");
  const bool on_street = horizontal(s.heading) ? is_multiple(s.position.y, g.block_size, 1e-6)
                                                : is_multiple(s.position.x, g.block_size, 1e-6);
  if (!on_street || !on_grid(s.position, g)) throw InvalidArgument("vehicle position is off-grid");

  const double p_stop = stop_probability(g, s.velocity);
  double remaining = dt;
  while (remaining > 0.0) {
    if (s.wait_remaining > 0.0) {
      const double hold = std::min(s.wait_remaining, remaining);
      s.wait_remaining -= hold;
      remaining -= hold;
      continue;
    }
    const bool horiz = horizontal(s.heading);
    double& along = horiz ? s.position.x : s.position.y;
    double& across = horiz ? s.position.y : s.position.x;
    across = std::round(across / g.block_size) * g.block_size;
    const double sign = (s.heading == Heading::east || s.heading == Heading::north) ? 1.0 : -1.0;
    const double limit = horiz ? g.width : g.height;

    const double cell = along / g.block_size;
    double k = sign > 0 ? std::floor(cell + kSnap) + 1.0 : std::ceil(cell - kSnap) - 1.0;
    double target = k * g.block_size;
    if (target > limit + kSnap || target < -kSnap) {
      // Already at a boundary intersection facing outward.
      target = along;
    }
    const double gap = std::abs(target - along);
    const double travel = s.velocity * remaining;
    if (travel < gap) {
      along += sign * travel;
      remaining = 0.0;
      break;
    }
    along = target;
    remaining -= gap / s.velocity;
    const bool stops = rng.bernoulli(p_stop);
    const double u = rng.uniform01();
    if (stops) s.wait_remaining = g.wait_time / 2.0;
    s.heading = choose_heading(s.position, s.heading, g, u);
  }
  return s;
}

Placement random_placement(const GridParams& g, Rng& rng) {
  const bool horiz = rng.bernoulli(0.5);
  Placement out;
  if (horiz) {
    const auto streets = static_cast<std::uint64_t>(std::llround(g.height / g.block_size)) + 1;
    out.position.y = static_cast<double>(rng.uniform_index(streets)) * g.block_size;
    out.position.x = rng.uniform(0.0, g.width);
    out.heading = rng.bernoulli(0.5) ? Heading::east : Heading::west;
  } else {
    const auto streets = static_cast<std::uint64_t>(std::llround(g.width / g.block_size)) + 1;
    out.position.x = static_cast<double>(rng.uniform_index(streets)) * g.block_size;
    out.position.y = rng.uniform(0.0, g.height);
    out.heading = rng.bernoulli(0.5) ? Heading::north : Heading::south;
  }
  return out;
}

}  // namespace vcache::mobility
