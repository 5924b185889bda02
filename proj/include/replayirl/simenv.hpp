#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string_view>
#include <vector>

#include "replayirl/features.hpp"
#include "replayirl/geometry.hpp"
#include "replayirl/trajdata.hpp"

namespace replayirl::simenv {

inline constexpr double kMaxSpeed = 1.5;           // m/s
inline constexpr double kMaxHeadingRate = 270.0;   // deg/s, symmetric bound

struct AgentState {
  Vec2 position;
  double heading = 0.0;  // rad, (-pi, pi]
  double speed = 0.0;    // m/s
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Action {
  double target_speed = 0.0;  // m/s
  double heading_rate = 0.0;  // deg/s
};

Action clamp_action(Action a);

struct EpisodeConfig {
  double dt = 0.04;
  double goal_radius = 0.10;
  int max_steps = 1000;
  double pedestrian_radius = 0.10;

  double collision_distance() const { return 2.0 * pedestrian_radius; }
};

enum class Terminal { Running, GoalReached, Timeout, Collision };

std::string_view terminal_name(Terminal t);

struct StepOutcome {
  features::FeatureVector next_features{};
  Terminal terminal = Terminal::Running;
  AgentState agent_state;
  int step_index = 0;
};

struct PedestrianPosition {
  int ped_id = 0;
  Vec2 position;
};

// Full mutable episode state, enough to resume an episode exactly.
struct EpisodeSnapshot {
  bool active = false;
  int ped_id = 0;
  double start_time = 0.0;
  Vec2 goal;
  AgentState agent;
  int step_index = 0;
  Terminal terminal = Terminal::Running;
};

class Environment {
 public:
  explicit Environment(std::shared_ptr<const trajdata::Scene> scene, EpisodeConfig config = {});

  StepOutcome reset(int ped_id, double start_time);
  StepOutcome step(Action action);

  // Pedestrians whose tracks span scene time t, excluding the one the agent replaced.
  std::vector<PedestrianPosition> pedestrian_positions(double t) const;
  std::vector<features::PedestrianState> pedestrian_states(double t) const;

  double time() const { return state_.start_time + state_.step_index * config_.dt; }
  const AgentState& agent() const { return state_.agent; }
  Vec2 goal() const { return state_.goal; }
  Terminal terminal() const { return state_.terminal; }
  bool active() const { return state_.active; }
  int step_index() const { return state_.step_index; }
  int ped_id() const { return state_.ped_id; }
  const EpisodeConfig& config() const { return config_; }
  const trajdata::Scene& scene() const { return *scene_; }

  // Distance to the nearest visible pedestrian, +inf if none.
  double nearest_pedestrian_distance() const;
  features::FeatureVector observe() const;

  EpisodeSnapshot snapshot() const { return state_; }
  void restore(const EpisodeSnapshot& s) { state_ = s; }

 private:
  std::shared_ptr<const trajdata::Scene> scene_;
  EpisodeConfig config_;
  double roi_diag_;
  EpisodeSnapshot state_;
};

// CSV trace of an episode: t, agent_x, agent_y, heading, speed, terminal.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out);
  void record(double t, const AgentState& s, Terminal terminal);

 private:
  std::ostream& out_;
};

}  // namespace replayirl::simenv
