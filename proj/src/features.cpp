#include "replayirl/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace replayirl::features {

int sector_of(double relative_angle) {
  constexpr double width = 2.0 * std::numbers::pi / kSectors;
  const double shifted = wrap_angle(relative_angle) + width / 2.0;
  int s = static_cast<int>(std::floor(shifted / width));
  s %= kSectors;
  if (s < 0) s += kSectors;
  return s;
}

FeatureVector extract(const Pose& agent, std::span<const PedestrianState> peds, Vec2 goal, double roi_diag) {
  FeatureVector f{};
  const Vec2 agent_velocity = agent.speed * Vec2{std::cos(agent.heading), std::sin(agent.heading)};

  for (const auto& ped : peds) {
    const Vec2 offset = ped.position - agent.position;
    const double d = offset.norm();
    if (d > kOuterRadius) continue;

    int sector = 0;
    double approach = 0.0;
    if (d > 0.0) {
      sector = sector_of(std::atan2(offset.y, offset.x) - agent.heading);
      // Component of the relative velocity pointing from the pedestrian to the agent.
      const Vec2 toward_agent = (-1.0 / d) * offset;
      approach = (ped.velocity - agent_velocity).dot(toward_agent);
    }
    const int ring = d <= kInnerRadius ? 0 : 1;
    const double w = std::max(std::clamp(approach / kMaxSpeed, 0.0, 1.0), kPresenceFloor);
    double& cell = f[ring * kSectors + sector];
    cell = std::max(cell, w);
  }

  const Vec2 to_goal = goal - agent.position;
  const double goal_dist = to_goal.norm();
  f[kGoalDistance] = std::clamp(goal_dist / roi_diag, 0.0, 1.0);
  if (goal_dist > 1e-12) {
    const double bearing = std::atan2(to_goal.y, to_goal.x) - agent.heading;
    f[kBearingCos] = std::cos(bearing);
    f[kBearingSin] = std::sin(bearing);
  } else {
    f[kBearingCos] = 1.0;
    f[kBearingSin] = 0.0;
  }
  f[kSpeed] = std::clamp(agent.speed / kMaxSpeed, 0.0, 1.0);
  return f;
}

}  // namespace replayirl::features
