#include "replayirl/rewards.hpp"

namespace replayirl::rewards {

double r_approach(Vec2 position, Vec2 previous_position, Vec2 goal) {
  const Vec2 to_goal = goal - previous_position;
  const double norm = to_goal.norm();
  if (norm <= 1e-9) return 0.0;
  return 0.1 * (position - previous_position).dot(to_goal) / norm;
}

double r_goal(Vec2 position, Vec2 goal, double goal_radius) {
  return distance(position, goal) <= goal_radius ? 1.0 : 0.0;
}

double r_col(double nearest_pedestrian, double pedestrian_radius) {
  if (nearest_pedestrian < 2.0 * pedestrian_radius) return -1.0;
  if (nearest_pedestrian < 4.0 * pedestrian_radius) return -0.01 * nearest_pedestrian;
  return 0.0;
}

double total(const BaselineRewardInputs& in) {
  return r_approach(in.position, in.previous_position, in.goal) + r_col(in.nearest_pedestrian, in.pedestrian_radius) +
         r_goal(in.position, in.goal, in.goal_radius);
}

}  // namespace replayirl::rewards
