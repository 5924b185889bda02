#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replayirl/features.hpp"
#include "replayirl/geometry.hpp"

namespace replayirl::trajdata {

struct RawSample {
  int frame = 0;
  double x = 0.0;  // pixels
  double y = 0.0;
};

struct RawTrack {
  int ped_id = 0;
  std::vector<RawSample> samples;  // strictly increasing frame
};

// Projective map from image pixels to world meters, h(2,2) normalized to 1.
class Homography {
 public:
  Homography() : h_(Eigen::Matrix3d::Identity()) {}
  explicit Homography(const Eigen::Matrix3d& h);

  // Exact solve for 4 correspondences, least squares (normal equations) for more.
  static Homography fit(std::span<const Vec2> src, std::span<const Vec2> dst);

  Vec2 apply(Vec2 p) const;
  Homography inverse() const;
  const Eigen::Matrix3d& matrix() const { return h_; }

 private:
  Eigen::Matrix3d h_;
};

struct TrackSample {
  double t = 0.0;  // seconds
  Vec2 p;          // meters
  friend bool operator==(const TrackSample&, const TrackSample&) = default;
};

struct WorldTrack {
  int ped_id = 0;
  std::vector<TrackSample> samples;

  double start_time() const { return samples.front().t; }
  double end_time() const { return samples.back().t; }
  Vec2 start() const { return samples.front().p; }
  Vec2 goal() const { return samples.back().p; }
  bool spans(double t) const { return !samples.empty() && t >= start_time() && t <= end_time(); }
  friend bool operator==(const WorldTrack&, const WorldTrack&) = default;
};

struct Scene {
  std::vector<WorldTrack> tracks;
  double frame_dt = 0.04;
  Rect roi;

  const WorldTrack* find(int ped_id) const;
  double duration() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct CleaningReport {
  std::size_t input_tracks = 0;
  std::size_t kept = 0;
  std::size_t dropped_too_short = 0;
  std::size_t dropped_outside_roi = 0;
  std::size_t dropped_collision = 0;

  std::string to_json() const;
};

struct CleanResult {
  Scene scene;
  CleaningReport report;
};

inline constexpr double kDefaultCollisionThreshold = 0.2;

// Projects raw tracks through h and filters them. Throws EmptyScene when
// nothing survives.
CleanResult clean_scene(std::span<const RawTrack> raw, const Homography& h, const Rect& roi, double frame_dt,
                        double collision_threshold = kDefaultCollisionThreshold);
CleanResult clean_scene(const Scene& scene, double collision_threshold = kDefaultCollisionThreshold);

// Linear interpolation between bracketing samples; OutOfTrackRange outside the span.
Vec2 interpolate_position(const WorldTrack& track, double t);
// Finite difference over the dataset frame containing t.
Vec2 track_velocity(const WorldTrack& track, double t);

// Smallest distance between two tracks over their shared frames, nullopt if none.
std::optional<double> min_simultaneous_distance(const WorldTrack& a, const WorldTrack& b, double frame_dt);

struct SyntheticSceneConfig {
  int pedestrians = 20;
  Rect roi{0.0, 0.0, 10.0, 10.0};
  double speed_min = 0.9;
  double speed_max = 1.4;
  double duration = 60.0;  // seconds
  double frame_dt = 0.04;
  double margin = 0.5;
  double max_bend = 0.15;  // control-point offset as a fraction of path length
  double collision_threshold = kDefaultCollisionThreshold;
  int max_retries = 200;
};

Scene generate_synthetic_scene(const SyntheticSceneConfig& config, std::uint64_t seed);

// Straight walkers from a circle to the antipodal point, started far enough
// apart in time that no two are ever present together.
struct CrossingSceneConfig {
  int pedestrians = 8;
  double side = 10.0;
  double radius = 4.5;
  double speed = 1.2;
  double stagger = 45.0;  // seconds between consecutive starts
  double frame_dt = 0.04;
};

Scene crossing_scene(const CrossingSceneConfig& config);

struct ExpertTrajectory {
  int ped_id = 0;
  std::vector<features::FeatureVector> states;  // states[t] has episode step index t
  friend bool operator==(const ExpertTrajectory&, const ExpertTrajectory&) = default;
};

using ExpertSet = std::vector<ExpertTrajectory>;

// Replays each pedestrian at the simulator step dt and extracts its features.
ExpertSet build_expert_set(const Scene& scene, double sim_dt);

// ---- files ----

// `ped_id frame x y`, whitespace separated, one sample per line.
std::vector<RawTrack> read_track_file(const std::filesystem::path& path);
void write_track_file(const std::filesystem::path& path, std::span<const RawTrack> tracks);

void write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);

void write_expert_set(const std::filesystem::path& path, const ExpertSet& experts);
ExpertSet read_expert_set(const std::filesystem::path& path);

}  // namespace replayirl::trajdata
