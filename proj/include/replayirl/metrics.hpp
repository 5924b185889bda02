#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "replayirl/geometry.hpp"
#include "replayirl/simenv.hpp"
#include "replayirl/trajdata.hpp"

namespace replayirl::metrics {

inline constexpr double kIntimateDistance = 0.5;
inline constexpr double kPersonalDistance = 1.2;
inline constexpr double kDriftHorizon = 10.0;
inline constexpr std::size_t kMovingAverageWindow = 100;

struct AgentSample {
  double t = 0.0;  // seconds since the episode start
  Vec2 position;
};

struct EvalEpisode {
  int ped_id = 0;
  double start_time = 0.0;
  std::vector<AgentSample> agent;
  trajdata::WorldTrack ground_truth;
  std::vector<std::vector<Vec2>> pedestrians;  // visible pedestrians at each agent sample
  simenv::Terminal terminal = simenv::Terminal::Running;
};

struct IntrusionCounts {
  std::int64_t intimate = 0;
  std::int64_t personal = 0;
  friend bool operator==(const IntrusionCounts&, const IntrusionCounts&) = default;
};

// Per sample and per pedestrian: intimate for d in [0, 0.5], personal for d in (0.5, 1.2].
IntrusionCounts proxemic_counts(const EvalEpisode& episode);

struct DriftPoint {
  double t = 0.0;
  double distance = 0.0;
};

// Agent-to-ground-truth distance for samples with t <= horizon. The ground
// truth is held at its final position once its track has ended.
std::vector<DriftPoint> drift(const EvalEpisode& episode, double horizon = kDriftHorizon);
// Per-step mean across episodes, aligned by sample index.
std::vector<DriftPoint> mean_drift(std::span<const EvalEpisode> episodes, double horizon = kDriftHorizon);

// Fraction of episodes ending in GoalReached. Throws EmptyEvalSet.
double goal_success(std::span<const EvalEpisode> episodes);

double feature_rmse(std::span<const double> expert_mean, std::span<const double> policy_mean);
// Trailing window; the first window-1 entries average whatever is available.
std::vector<double> moving_average(std::span<const double> series, std::size_t window = kMovingAverageWindow);

// Records (env interactions, IRL updates) after every IRL update.
class InteractionCounter {
 public:
  void on_env_step(std::int64_t n = 1) { env_steps_ += n; }
  void on_irl_update() { pairs_.emplace_back(env_steps_, ++irl_updates_); }

  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t irl_updates() const { return irl_updates_; }
  const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs() const { return pairs_; }

  void restore(std::int64_t env_steps, std::vector<std::pair<std::int64_t, std::int64_t>> pairs);

 private:
  std::int64_t env_steps_ = 0;
  std::int64_t irl_updates_ = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs_;
};

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * standard error
};

MeanCi mean_ci95(std::span<const double> values);

}  // namespace replayirl::metrics
