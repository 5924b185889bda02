#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "replayirl/metrics.hpp"
#include "replayirl/sac.hpp"
#include "replayirl/simenv.hpp"
#include "replayirl/trajdata.hpp"

namespace replayirl::evaluation {

// Deterministic-policy episode replacing `ped_id`, starting at its track start.
metrics::EvalEpisode rollout(const sac::SoftActorCritic& agent, std::shared_ptr<const trajdata::Scene> scene,
                             int ped_id, const simenv::EpisodeConfig& config,
                             simenv::TraceWriter* trace = nullptr);

// One episode per pedestrian, in scene order; `limit` caps the count.
// Throws EmptyEvalSet when the scene has no pedestrians.
std::vector<metrics::EvalEpisode> evaluate(const sac::SoftActorCritic& agent,
                                           std::shared_ptr<const trajdata::Scene> scene,
                                           const simenv::EpisodeConfig& config,
                                           std::optional<std::size_t> limit = std::nullopt);

}  // namespace replayirl::evaluation
