#pragma once

#include "vcache/core/model.hpp"
#include "vcache/core/rng.hpp"

namespace vcache::mobility {

/// Relative weights for the choice made at an intersection. U-turns are never
/// drawn unless no other heading stays on the map.
struct TurnWeights {
  double straight = 1.0;
  double left = 1.0;
  double right = 1.0;
};

/// Manhattan grid: streets every `block_size` meters along both axes over
/// [0, width] x [0, height].
struct GridParams {
  double intersection_density = 1.0 / 200.0;  // intersections per meter
  double wait_time = 30.0;                    // maximal tolerated wait, s
  double wait_prob = 0.5;
  double block_size = 200.0;
  double width = 1200.0;
  double height = 1200.0;
  TurnWeights turns;

  /// Throws InvalidArgument when the parameters are inconsistent.
  void validate() const;
};

double move_probability(const GridParams& g, double velocity);
double stop_probability(const GridParams& g, double velocity);

bool on_grid(Vec2 p, const GridParams& g, double tol = 1e-6);

/// Advances one vehicle by `dt` seconds. Draws exactly two variates from `rng`
/// at every intersection reached (stop decision, then heading).
VehicleState step(VehicleState state, const GridParams& g, double dt, Rng& rng);

/// Uniformly random point on a street with a heading along that street.
struct Placement {
  Vec2 position;
  Heading heading;
};
Placement random_placement(const GridParams& g, Rng& rng);

}  // namespace vcache::mobility
