#include "replayirl/evaluation.hpp"

#include "replayirl/error.hpp"

namespace replayirl::evaluation {

namespace {

std::vector<Vec2> visible(const simenv::Environment& env) {
  std::vector<Vec2> out;
  for (const auto& p : env.pedestrian_positions(env.time())) out.push_back(p.position);
  return out;
}

}  // namespace

metrics::EvalEpisode rollout(const sac::SoftActorCritic& agent, std::shared_ptr<const trajdata::Scene> scene,
                             int ped_id, const simenv::EpisodeConfig& config, simenv::TraceWriter* trace) {
  const auto* track = scene->find(ped_id);
  if (track == nullptr) throw Error(Errc::UnknownPedestrian, "no pedestrian " + std::to_string(ped_id));

  metrics::EvalEpisode ep;
  ep.ped_id = ped_id;
  ep.start_time = track->start_time();
  ep.ground_truth = *track;

  simenv::Environment env(scene, config);
  auto outcome = env.reset(ped_id, ep.start_time);
  auto record = [&] {
    const double t = env.step_index() * config.dt;
    ep.agent.push_back({t, env.agent().position});
    ep.pedestrians.push_back(visible(env));
    if (trace != nullptr) trace->record(t, env.agent(), env.terminal());
  };
  record();
  while (outcome.terminal == simenv::Terminal::Running) {
    const auto act = agent.act_deterministic(outcome.next_features);
    outcome = env.step(act.env_action);
    record();
  }
  ep.terminal = outcome.terminal;
  return ep;
}

std::vector<metrics::EvalEpisode> evaluate(const sac::SoftActorCritic& agent,
                                           std::shared_ptr<const trajdata::Scene> scene,
                                           const simenv::EpisodeConfig& config, std::optional<std::size_t> limit) {
  if (scene->tracks.empty()) throw Error(Errc::EmptyEvalSet, "evaluation scene has no pedestrians");
  std::vector<metrics::EvalEpisode> out;
  const std::size_t n = std::min(scene->tracks.size(), limit.value_or(scene->tracks.size()));
  for (std::size_t k = 0; k < n; ++k) out.push_back(rollout(agent, scene, scene->tracks[k].ped_id, config));
  return out;
}

}  // namespace replayirl::evaluation
