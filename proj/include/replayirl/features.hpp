#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "replayirl/geometry.hpp"

namespace replayirl::features {

inline constexpr double kInnerRadius = 0.65;
inline constexpr double kOuterRadius = 1.0;
inline constexpr int kRings = 2;
inline constexpr int kSectors = 8;
inline constexpr double kMaxSpeed = 1.5;
inline constexpr double kPresenceFloor = 0.25;

inline constexpr std::size_t kRiskCells = kRings * kSectors;
inline constexpr std::size_t kGoalDistance = kRiskCells;
inline constexpr std::size_t kBearingCos = kRiskCells + 1;
inline constexpr std::size_t kBearingSin = kRiskCells + 2;
inline constexpr std::size_t kSpeed = kRiskCells + 3;
inline constexpr std::size_t kFeatureDim = kRiskCells + 4;

// Layout: ring-major risk cells [ring * 8 + sector], then normalized goal
// distance, bearing (cos, sin) in the heading frame, normalized speed.
using FeatureVector = std::array<double, kFeatureDim>;

struct Pose {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
};

struct PedestrianState {
  Vec2 position;
  Vec2 velocity;
};

// Sector whose center lies at `relative_angle` from the heading; sector 0 is
// centered straight ahead and indices increase counter-clockwise.
int sector_of(double relative_angle);

FeatureVector extract(const Pose& agent, std::span<const PedestrianState> peds, Vec2 goal, double roi_diag);

}  // namespace replayirl::features
