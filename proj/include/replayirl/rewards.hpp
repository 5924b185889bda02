#pragma once

#include "replayirl/geometry.hpp"

namespace replayirl::rewards {

struct BaselineRewardInputs {
  Vec2 position;           // x_t
  Vec2 previous_position;  // x_{t-1}
  Vec2 goal;               // x_g
  double goal_radius = 0.10;
  double nearest_pedestrian = 0.0;  // d_min, +inf when nobody is around
  double pedestrian_radius = 0.10;
};

// 0.1 * progress of the step along the unit direction from x_{t-1} to the goal.
// Returns 0 when x_{t-1} already sits on the goal.
double r_approach(Vec2 position, Vec2 previous_position, Vec2 goal);
double r_goal(Vec2 position, Vec2 goal, double goal_radius);
double r_col(double nearest_pedestrian, double pedestrian_radius);
double total(const BaselineRewardInputs& in);

}  // namespace replayirl::rewards
