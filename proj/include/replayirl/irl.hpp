#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "replayirl/metrics.hpp"
#include "replayirl/neural.hpp"
#include "replayirl/replay_buffer.hpp"
#include "replayirl/sac.hpp"
#include "replayirl/simenv.hpp"
#include "replayirl/trajdata.hpp"

namespace replayirl::irl {

struct IrlConfig {
  double gamma = 0.99;   // discount inside the reward objective
  double sigma_t = 1.0;  // std of the Gaussian whose peak density stands in for expert pi(a|s)
  std::size_t n_expert = 16;
  std::size_t n_buffer = 16;
  std::int64_t i_rl = 1;
  std::int64_t i_irl = 3;
  std::size_t segment_len = 64;
  std::vector<int> reward_hidden{128, 128};
  neural::AdamWConfig optimizer{1e-4, 0.9999, 1e-4};
};

// 1 / (sigma_t * sqrt(2 pi))
double expert_density(double sigma_t);

// log(exp(x) + exp(log_p)) without overflow.
double log_add_exp(double x, double log_p);

// A trajectory piece fed to the reward objective. Buffer segments carry the
// stored pre-squash actions; expert segments carry states only.
struct IrlSegment {
  enum class Source { Buffer, Expert };
  Source source = Source::Expert;
  std::vector<features::FeatureVector> states;
  std::vector<int> steps;  // episode-relative t of each state
  std::vector<sac::ActionVec> pre_squash;
};

IrlSegment from_buffer(const sac::Segment& segment);
// Window [offset, offset + len) of an expert trajectory with its own step indices.
IrlSegment from_expert(const trajdata::ExpertTrajectory& traj, std::size_t offset, std::size_t len);

// Log-density of each (state, pre-squash action) column under the current policy.
using PolicyLogDensity = std::function<neural::Vector(const neural::Matrix& states, const neural::Matrix& pre_squash)>;

PolicyLogDensity policy_log_density(const sac::SoftActorCritic& agent);

double reward(const neural::Network& reward_net, const features::FeatureVector& s);

// Mean over trajectories of sum_t gamma^t R(s_t).
double l_obs(const neural::Network& reward_net, std::span<const IrlSegment> experts, double gamma);
// sum_t log(exp(gamma^t R(s_t)) + pi(a_t|s_t)) for buffer segments, with the
// constant expert density in place of pi for expert segments.
double a_term(const neural::Network& reward_net, const IrlSegment& segment, const IrlConfig& config,
              const PolicyLogDensity& policy);
double l_is(const neural::Network& reward_net, std::span<const IrlSegment> segments, const IrlConfig& config,
            const PolicyLogDensity& policy);

struct Objective {
  double value = 0.0;  // l_obs - l_is
  double l_obs = 0.0;
  double l_is = 0.0;
  neural::Vector gradient;  // d value / d theta
};

// The expert segments are used in l_obs and, together with the buffer
// segments, in l_is.
Objective objective(const neural::Network& reward_net, std::span<const IrlSegment> experts,
                    std::span<const IrlSegment> buffer_segments, const IrlConfig& config,
                    const PolicyLogDensity& policy);

struct RewardUpdate {
  Objective objective;
  double feature_rmse = 0.0;  // between mean expert and mean buffer-sample features
};

// Samples n_expert expert windows and n_buffer buffer segments and takes one
// AdamW ascent step on the objective.
RewardUpdate update_reward(neural::Network& reward_net, neural::AdamW& optimizer, const trajdata::ExpertSet& experts,
                           const sac::ReplayBuffer& buffer, const IrlConfig& config, const PolicyLogDensity& policy,
                           Rng& rng);

// reward <- R(next_state) for every transition.
void relabel_rewards(std::span<sac::Transition> batch, const neural::Network& reward_net);

// ---- Algorithm-1 training loop ----

enum class Algorithm { ReplayIrl, SacHandcrafted };

struct TrainConfig {
  Algorithm algorithm = Algorithm::ReplayIrl;
  IrlConfig irl;
  sac::SacConfig sac;
  simenv::EpisodeConfig episode;
  std::int64_t iterations = 0;  // M
  std::int64_t random_steps = 1000;  // uniform random actions before the policy takes over
  std::int64_t update_after = 1000;  // SAC updates start once the buffer holds this many transitions
  std::uint64_t seed = 0;
};

struct TrainCounters {
  std::int64_t iteration = 0;
  std::int64_t policy_updates = 0;  // UpdatePolicy invocations
  std::int64_t sac_updates = 0;     // gradient steps actually taken inside UpdatePolicy
  std::int64_t reward_updates = 0;  // UpdateReward invocations
  std::int64_t episodes = 0;
};

struct LogSinks {
  std::ostream* irl = nullptr;  // iteration,L,l_obs,l_is,env_interactions,feature_rmse
  std::ostream* sac = nullptr;  // step,critic_loss,actor_loss,alpha,mean_episode_return
};

void write_irl_log_header(std::ostream& out);
void write_sac_log_header(std::ostream& out);

class Trainer {
 public:
  Trainer(TrainConfig config, std::shared_ptr<const trajdata::Scene> scene, trajdata::ExpertSet experts);

  // Runs iterations until counters().iteration == until (or M when omitted).
  void run(std::optional<std::int64_t> until = std::nullopt);
  void iterate();

  void update_policy();
  void update_reward();

  const TrainConfig& config() const { return config_; }
  const TrainCounters& counters() const { return counters_; }
  const metrics::InteractionCounter& interactions() const { return interactions_; }
  const std::vector<double>& feature_rmse_series() const { return rmse_; }
  // Iteration index at which each entry of feature_rmse_series() was recorded.
  const std::vector<std::int64_t>& feature_rmse_iterations() const { return rmse_iterations_; }
  const neural::Network& reward_net() const { return reward_net_; }
  const sac::SoftActorCritic& agent() const { return agent_; }
  const sac::ReplayBuffer& buffer() const { return buffer_; }

  void set_log_sinks(LogSinks sinks) { sinks_ = sinks; }

  void save(io::Writer& w) const;
  // Restores state written by save(); the scene and experts are supplied again.
  static Trainer load(io::Reader& r, TrainConfig config, std::shared_ptr<const trajdata::Scene> scene,
                      trajdata::ExpertSet experts);

 private:
  void begin_episode();

  TrainConfig config_;
  std::shared_ptr<const trajdata::Scene> scene_;
  trajdata::ExpertSet experts_;
  simenv::Environment env_;
  features::FeatureVector observation_{};
  sac::SoftActorCritic agent_;
  neural::Network reward_net_;
  neural::AdamW reward_opt_;
  sac::ReplayBuffer buffer_;
  Rng rng_;
  TrainCounters counters_;
  metrics::InteractionCounter interactions_;
  std::size_t next_ped_ = 0;
  double episode_return_ = 0.0;
  std::vector<double> recent_returns_;
  std::vector<double> rmse_;
  std::vector<std::int64_t> rmse_iterations_;
  LogSinks sinks_;
};

}  // namespace replayirl::irl
