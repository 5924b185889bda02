#include "replayirl/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "replayirl/error.hpp"

namespace replayirl::simenv {

Action clamp_action(Action a) {
  auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
  return {std::clamp(finite_or_zero(a.target_speed), 0.0, kMaxSpeed),
          std::clamp(finite_or_zero(a.heading_rate), -kMaxHeadingRate, kMaxHeadingRate)};
}

std::string_view terminal_name(Terminal t) {
  switch (t) {
    case Terminal::Running: return "running";
    case Terminal::GoalReached: return "goal";
    case Terminal::Timeout: return "timeout";
    case Terminal::Collision: return "collision";
  }
  return "unknown";
}

Environment::Environment(std::shared_ptr<const trajdata::Scene> scene, EpisodeConfig config)
    : scene_(std::move(scene)), config_(config), roi_diag_(scene_->roi.diagonal()) {
  if (!(roi_diag_ > 0.0)) roi_diag_ = 1.0;
}

StepOutcome Environment::reset(int ped_id, double start_time) {
  const auto* track = scene_->find(ped_id);
  if (track == nullptr) throw Error(Errc::UnknownPedestrian, "no pedestrian " + std::to_string(ped_id));
  EpisodeSnapshot s;
  s.active = true;
  s.ped_id = ped_id;
  s.start_time = start_time;
  s.goal = track->goal();
  s.agent.position = trajdata::interpolate_position(*track, start_time);
  // Initial heading follows the next dataset displacement.
  const Vec2 v = trajdata::track_velocity(*track, start_time);
  s.agent.heading = v.norm() > 0.0 ? wrap_angle(std::atan2(v.y, v.x)) : 0.0;
  s.agent.speed = 0.0;
  state_ = s;
  return {observe(), Terminal::Running, state_.agent, 0};
}

StepOutcome Environment::step(Action action) {
  if (!state_.active || state_.terminal != Terminal::Running) {
    throw Error(Errc::EpisodeFinished, "step after terminal");
  }
  const Action a = clamp_action(action);
  constexpr double deg = std::numbers::pi / 180.0;
  AgentState& ag = state_.agent;
  ag.heading = wrap_angle(ag.heading + a.heading_rate * deg * config_.dt);
  ag.speed = a.target_speed;
  ag.position = ag.position + (ag.speed * config_.dt) * Vec2{std::cos(ag.heading), std::sin(ag.heading)};
  ++state_.step_index;

  if (nearest_pedestrian_distance() < config_.collision_distance()) {
    state_.terminal = Terminal::Collision;
  } else if (distance(ag.position, state_.goal) <= config_.goal_radius) {
    state_.terminal = Terminal::GoalReached;
  } else if (state_.step_index >= config_.max_steps) {
    state_.terminal = Terminal::Timeout;
  }
  return {observe(), state_.terminal, ag, state_.step_index};
}

std::vector<PedestrianPosition> Environment::pedestrian_positions(double t) const {
  std::vector<PedestrianPosition> out;
  for (const auto& track : scene_->tracks) {
    if (state_.active && track.ped_id == state_.ped_id) continue;
    if (track.spans(t)) out.push_back({track.ped_id, trajdata::interpolate_position(track, t)});
  }
  return out;
}

std::vector<features::PedestrianState> Environment::pedestrian_states(double t) const {
  std::vector<features::PedestrianState> out;
  for (const auto& track : scene_->tracks) {
    if (state_.active && track.ped_id == state_.ped_id) continue;
    if (track.spans(t)) out.push_back({trajdata::interpolate_position(track, t), trajdata::track_velocity(track, t)});
  }
  return out;
}

double Environment::nearest_pedestrian_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pedestrian_positions(time())) best = std::min(best, distance(p.position, state_.agent.position));
  return best;
}

features::FeatureVector Environment::observe() const {
  const auto peds = pedestrian_states(time());
  return features::extract({state_.agent.position, state_.agent.heading, state_.agent.speed}, peds, state_.goal,
                            roi_diag_);
}

TraceWriter::TraceWriter(std::ostream& out) : out_(out) {
  out_.precision(17);
  out_ << "t,agent_x,agent_y,heading,speed,terminal\n";
}

void TraceWriter::record(double t, const AgentState& s, Terminal terminal) {
  out_ << t << ',' << s.position.x << ',' << s.position.y << ',' << s.heading << ',' << s.speed << ','
       << terminal_name(terminal) << '\n';
}

}  // namespace replayirl::simenv
