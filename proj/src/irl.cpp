#include "replayirl/irl.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>

#include "replayirl/error.hpp"
#include "replayirl/rewards.hpp"

namespace replayirl::irl {

namespace {

using neural::Matrix;
using neural::Vector;

constexpr int kObsDim = static_cast<int>(features::kFeatureDim);
constexpr std::size_t kReturnWindow = 10;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix states_matrix(std::span<const features::FeatureVector> states) {
  Matrix m(kObsDim, static_cast<Eigen::Index>(states.size()));
  for (std::size_t c = 0; c < states.size(); ++c) {
    m.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(states[c].data(), kObsDim);
  }
  return m;
}

void check_actions(const IrlSegment& s) {
  if (s.source == IrlSegment::Source::Buffer && s.pre_squash.size() != s.states.size()) {
    throw Error(Errc::MissingAction, "buffer segment without stored actions");
  }
}

// Log-densities entering the log-sum term, one per state of the segment.
Vector segment_log_densities(const IrlSegment& s, const IrlConfig& config, const PolicyLogDensity& policy) {
  const auto n = static_cast<Eigen::Index>(s.states.size());
  if (s.source == IrlSegment::Source::Expert) return Vector::Constant(n, std::log(expert_density(config.sigma_t)));
  check_actions(s);
  if (n == 0) return Vector(0);
  Matrix actions(sac::kActionDim, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int i = 0; i < sac::kActionDim; ++i) actions(i, c) = s.pre_squash[static_cast<std::size_t>(c)][i];
  }
  return policy(states_matrix(s.states), actions);
}

}  // namespace

double expert_density(double sigma_t) { return 1.0 / (sigma_t * std::sqrt(2.0 * std::numbers::pi)); }

double log_add_exp(double x, double log_p) {
  const double hi = std::max(x, log_p);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(-std::abs(x - log_p)));
}

IrlSegment from_buffer(const sac::Segment& segment) {
  IrlSegment s;
  s.source = IrlSegment::Source::Buffer;
  for (const auto& t : segment) {
    s.states.push_back(t.state);
    s.steps.push_back(t.step_index);
    s.pre_squash.push_back(t.pre_squash);
  }
  return s;
}

IrlSegment from_expert(const trajdata::ExpertTrajectory& traj, std::size_t offset, std::size_t len) {
  IrlSegment s;
  s.source = IrlSegment::Source::Expert;
  const std::size_t stop = std::min(traj.states.size(), offset + len);
  for (std::size_t k = offset; k < stop; ++k) {
    s.states.push_back(traj.states[k]);
    s.steps.push_back(static_cast<int>(k));
  }
  return s;
}

PolicyLogDensity policy_log_density(const sac::SoftActorCritic& agent) {
  return [&agent](const Matrix& states, const Matrix& pre_squash) { return agent.log_prob(states, pre_squash); };
}

double reward(const neural::Network& reward_net, const features::FeatureVector& s) {
  return reward_net.forward(std::span<const double>(s))(0);
}

double l_obs(const neural::Network& reward_net, std::span<const IrlSegment> experts, double gamma) {
  if (experts.empty()) throw Error(Errc::EmptyTrajectorySet, "l_obs needs at least one trajectory");
  double total = 0.0;
  for (const auto& e : experts) {
    if (e.states.empty()) continue;
    const Vector r = reward_net.forward(states_matrix(e.states)).row(0).transpose();
    for (std::size_t k = 0; k < e.states.size(); ++k) {
      total += std::pow(gamma, e.steps[k]) * r(static_cast<Eigen::Index>(k));
    }
  }
  return total / static_cast<double>(experts.size());
}

double a_term(const neural::Network& reward_net, const IrlSegment& segment, const IrlConfig& config,
              const PolicyLogDensity& policy) {
  check_actions(segment);
  if (segment.states.empty()) return 0.0;
  const Vector r = reward_net.forward(states_matrix(segment.states)).row(0).transpose();
  const Vector log_p = segment_log_densities(segment, config, policy);
  double total = 0.0;
  for (std::size_t k = 0; k < segment.states.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    total += log_add_exp(std::pow(config.gamma, segment.steps[k]) * r(c), log_p(c));
  }
  return total;
}

double l_is(const neural::Network& reward_net, std::span<const IrlSegment> segments, const IrlConfig& config,
            const PolicyLogDensity& policy) {
  if (segments.empty()) throw Error(Errc::EmptyTrajectorySet, "l_is needs at least one segment");
  double total = 0.0;
  for (const auto& s : segments) total += a_term(reward_net, s, config, policy);
  return total / static_cast<double>(segments.size());
}

Objective objective(const neural::Network& reward_net, std::span<const IrlSegment> experts,
                    std::span<const IrlSegment> buffer_segments, const IrlConfig& config,
                    const PolicyLogDensity& policy) {
  if (experts.empty()) throw Error(Errc::EmptyTrajectorySet, "objective needs expert trajectories");

  // One forward pass over every state; expert states appear once and receive
  // both their l_obs and l_is coefficients.
  std::vector<features::FeatureVector> states;
  std::vector<int> steps;
  std::vector<bool> is_expert;
  std::vector<Vector> log_p;
  for (const auto* group : {&experts, &buffer_segments}) {
    for (const auto& s : *group) {
      log_p.push_back(segment_log_densities(s, config, policy));
      states.insert(states.end(), s.states.begin(), s.states.end());
      steps.insert(steps.end(), s.steps.begin(), s.steps.end());
      is_expert.insert(is_expert.end(), s.states.size(), s.source == IrlSegment::Source::Expert);
    }
  }

  Objective out;
  out.gradient = Vector::Zero(reward_net.params().size());
  if (states.empty()) return out;

  neural::Tape tape;
  const Vector r = reward_net.forward(states_matrix(states), &tape).row(0).transpose();
  const double n_obs = static_cast<double>(experts.size());
  const double n_is = static_cast<double>(experts.size() + buffer_segments.size());
  Matrix cot(1, r.size());
  std::size_t k = 0;
  for (const auto& lp : log_p) {
    for (Eigen::Index j = 0; j < lp.size(); ++j, ++k) {
      const auto c = static_cast<Eigen::Index>(k);
      const double discount = std::pow(config.gamma, steps[k]);
      const double x = discount * r(c);
      double d = -discount * sigmoid(x - lp(j)) / n_is;
      out.l_is += log_add_exp(x, lp(j)) / n_is;
      if (is_expert[k]) {
        out.l_obs += x / n_obs;
        d += discount / n_obs;
      }
      cot(0, c) = d;
    }
  }
  out.value = out.l_obs - out.l_is;
  out.gradient = reward_net.backward(tape, cot).params;
  return out;
}

RewardUpdate update_reward(neural::Network& reward_net, neural::AdamW& optimizer, const trajdata::ExpertSet& experts,
                           const sac::ReplayBuffer& buffer, const IrlConfig& config, const PolicyLogDensity& policy,
                           Rng& rng) {
  if (experts.empty()) throw Error(Errc::EmptyTrajectorySet, "no expert trajectories");
  if (buffer.empty()) throw Error(Errc::EmptyBuffer, "reward update before any transition was stored");

  std::vector<IrlSegment> expert_segments;
  for (std::size_t k = 0; k < config.n_expert; ++k) {
    const auto& traj = experts[rng.index(experts.size())];
    std::size_t offset = 0;
    if (traj.states.size() > config.segment_len) offset = rng.index(traj.states.size() - config.segment_len + 1);
    expert_segments.push_back(from_expert(traj, offset, config.segment_len));
  }
  std::vector<IrlSegment> buffer_segments;
  for (const auto& seg : buffer.sample_segments(config.n_buffer, config.segment_len, rng)) {
    buffer_segments.push_back(from_buffer(seg));
  }

  RewardUpdate out;
  out.objective = objective(reward_net, expert_segments, buffer_segments, config, policy);
  optimizer.step(reward_net.params(), -out.objective.gradient);

  features::FeatureVector expert_mean{}, buffer_mean{};
  std::size_t ne = 0, nb = 0;
  for (const auto& s : expert_segments) {
    for (const auto& f : s.states) {
      for (std::size_t i = 0; i < f.size(); ++i) expert_mean[i] += f[i];
      ++ne;
    }
  }
  for (const auto& s : buffer_segments) {
    for (const auto& f : s.states) {
      for (std::size_t i = 0; i < f.size(); ++i) buffer_mean[i] += f[i];
      ++nb;
    }
  }
  for (std::size_t i = 0; i < features::kFeatureDim; ++i) {
    expert_mean[i] /= static_cast<double>(std::max<std::size_t>(ne, 1));
    buffer_mean[i] /= static_cast<double>(std::max<std::size_t>(nb, 1));
  }
  out.feature_rmse = metrics::feature_rmse(expert_mean, buffer_mean);
  return out;
}

void relabel_rewards(std::span<sac::Transition> batch, const neural::Network& reward_net) {
  if (batch.empty()) return;
  std::vector<features::FeatureVector> next;
  next.reserve(batch.size());
  for (const auto& t : batch) next.push_back(t.next_state);
  const Matrix r = reward_net.forward(states_matrix(next));
  for (std::size_t k = 0; k < batch.size(); ++k) batch[k].reward = r(0, static_cast<Eigen::Index>(k));
}

// ---- Trainer ----

void write_irl_log_header(std::ostream& out) { out << "iteration,L,l_obs,l_is,env_interactions,feature_rmse\n"; }

void write_sac_log_header(std::ostream& out) { out << "step,critic_loss,actor_loss,alpha,mean_episode_return\n"; }

namespace {

struct Seeds {
  std::uint64_t agent, reward, loop;
};

Seeds derive_seeds(std::uint64_t seed) {
  Rng master(seed);
  const auto a = master.next();
  const auto b = master.next();
  const auto c = master.next();
  return {a, b, c};
}

void validate(const TrainConfig& c, const trajdata::Scene& scene, const trajdata::ExpertSet& experts) {
  if (c.irl.i_rl < 1 || c.irl.i_irl < 1) throw Error(Errc::InvalidConfig, "update intervals must be >= 1");
  if (!(c.irl.sigma_t > 0.0)) throw Error(Errc::InvalidConfig, "sigma_t must be positive");
  if (!(c.irl.gamma > 0.0 && c.irl.gamma <= 1.0)) throw Error(Errc::InvalidConfig, "irl gamma must be in (0, 1]");
  if (c.irl.segment_len == 0) throw Error(Errc::InvalidConfig, "segment_len must be positive");
  if (c.sac.batch_size == 0) throw Error(Errc::InvalidConfig, "batch_size must be positive");
  if (c.iterations < 0) throw Error(Errc::InvalidConfig, "iterations must be >= 0");
  if (scene.tracks.empty()) throw Error(Errc::EmptyScene, "training scene has no pedestrians");
  if (c.algorithm == Algorithm::ReplayIrl && experts.empty()) {
    throw Error(Errc::EmptyTrajectorySet, "ReplayIRL needs expert trajectories");
  }
}

neural::Network make_reward_net(const TrainConfig& c) {
  Rng init(derive_seeds(c.seed).reward);
  return neural::Network::mlp(kObsDim, c.irl.reward_hidden, 1, init);
}

}  // namespace

Trainer::Trainer(TrainConfig config, std::shared_ptr<const trajdata::Scene> scene, trajdata::ExpertSet experts)
    : config_(std::move(config)),
      scene_(std::move(scene)),
      experts_(std::move(experts)),
      env_(scene_, config_.episode),
      agent_(config_.sac, derive_seeds(config_.seed).agent),
      reward_net_(make_reward_net(config_)),
      reward_opt_(static_cast<std::size_t>(reward_net_.params().size()), config_.irl.optimizer),
      buffer_(config_.sac.buffer_capacity),
      rng_(derive_seeds(config_.seed).loop) {
  validate(config_, *scene_, experts_);
}

void Trainer::run(std::optional<std::int64_t> until) {
  const std::int64_t stop = until.value_or(config_.iterations);
  while (counters_.iteration < stop) iterate();
}

void Trainer::iterate() {
  const std::int64_t m = ++counters_.iteration;
  if (m % config_.irl.i_rl == 0) update_policy();
  if (config_.algorithm == Algorithm::ReplayIrl && m % config_.irl.i_irl == 0) update_reward();
}

void Trainer::begin_episode() {
  const auto& track = scene_->tracks[next_ped_ % scene_->tracks.size()];
  ++next_ped_;
  observation_ = env_.reset(track.ped_id, track.start_time()).next_features;
  ++counters_.episodes;
  episode_return_ = 0.0;
}

void Trainer::update_policy() {
  if (!env_.active() || env_.terminal() != simenv::Terminal::Running) begin_episode();

  sac::Transition tr;
  tr.state = observation_;
  tr.step_index = env_.step_index();
  tr.episode_id = counters_.episodes;
  if (interactions_.env_steps() < config_.random_steps) {
    for (int i = 0; i < sac::kActionDim; ++i) {
      tr.action[i] = std::clamp(rng_.uniform(-1.0, 1.0), -sac::kSquashLimit, sac::kSquashLimit);
      tr.pre_squash[i] = std::atanh(tr.action[i]);
    }
    tr.log_prob = std::log(0.25);  // uniform on (-1, 1)^2
  } else {
    const auto act = agent_.act(observation_, false);
    tr.action = act.action;
    tr.pre_squash = act.pre_squash;
    tr.log_prob = act.log_prob;
  }

  const Vec2 previous = env_.agent().position;
  const auto outcome = env_.step(sac::to_env_action(tr.action));
  tr.next_state = outcome.next_features;
  tr.done = outcome.terminal != simenv::Terminal::Running;
  tr.truncated = outcome.terminal == simenv::Terminal::Timeout;

  double r = 0.0;
  if (config_.algorithm == Algorithm::SacHandcrafted) {
    r = rewards::total({outcome.agent_state.position, previous, env_.goal(), config_.episode.goal_radius,
                        env_.nearest_pedestrian_distance(), config_.episode.pedestrian_radius});
    tr.reward = r;
  } else {
    r = reward(reward_net_, tr.next_state);
  }
  episode_return_ += r;
  if (tr.done) {
    recent_returns_.push_back(episode_return_);
    if (recent_returns_.size() > kReturnWindow) recent_returns_.erase(recent_returns_.begin());
  }

  buffer_.store(std::move(tr));
  interactions_.on_env_step();
  observation_ = outcome.next_features;
  ++counters_.policy_updates;

  if (buffer_.size() >= std::max<std::int64_t>(config_.update_after, 1)) {
    auto batch = buffer_.sample_batch(config_.sac.batch_size, rng_);
    if (config_.algorithm == Algorithm::ReplayIrl) relabel_rewards(batch, reward_net_);
    const auto losses = agent_.update(batch);
    ++counters_.sac_updates;
    if (sinks_.sac != nullptr) {
      double mean_return = 0.0;
      for (double v : recent_returns_) mean_return += v;
      if (!recent_returns_.empty()) mean_return /= static_cast<double>(recent_returns_.size());
      *sinks_.sac << std::setprecision(12) << counters_.iteration << ',' << losses.critic << ',' << losses.actor << ','
                  << losses.alpha << ',' << mean_return << '\n';
    }
  }
}

void Trainer::update_reward() {
  const auto result =
      irl::update_reward(reward_net_, reward_opt_, experts_, buffer_, config_.irl, policy_log_density(agent_), rng_);
  ++counters_.reward_updates;
  interactions_.on_irl_update();
  rmse_.push_back(result.feature_rmse);
  rmse_iterations_.push_back(counters_.iteration);
  if (sinks_.irl != nullptr) {
    *sinks_.irl << std::setprecision(12) << counters_.iteration << ',' << result.objective.value << ','
                << result.objective.l_obs << ',' << result.objective.l_is << ',' << interactions_.env_steps() << ','
                << result.feature_rmse << '\n';
  }
}

void Trainer::save(io::Writer& w) const {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(config_.algorithm));
  w.put<std::uint64_t>(config_.seed);
  w.put(counters_);
  w.put<std::uint64_t>(next_ped_);
  w.put(episode_return_);
  w.put_array(recent_returns_);
  w.put_array(rmse_);
  w.put_array(rmse_iterations_);
  w.put<std::int64_t>(interactions_.env_steps());
  std::vector<std::int64_t> flat;
  for (const auto& [e, i] : interactions_.pairs()) {
    flat.push_back(e);
    flat.push_back(i);
  }
  w.put_array(flat);

  const auto snap = env_.snapshot();
  w.put<std::uint8_t>(snap.active);
  w.put<std::int32_t>(snap.ped_id);
  w.put(snap.start_time);
  w.put(snap.goal.x);
  w.put(snap.goal.y);
  w.put(snap.agent.position.x);
  w.put(snap.agent.position.y);
  w.put(snap.agent.heading);
  w.put(snap.agent.speed);
  w.put<std::int32_t>(snap.step_index);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(snap.terminal));
  w.put(observation_);

  w.put_string(rng_.save());
  agent_.save(w);
  reward_net_.save(w);
  reward_opt_.save(w);
  buffer_.save(w);
}

Trainer Trainer::load(io::Reader& r, TrainConfig config, std::shared_ptr<const trajdata::Scene> scene,
                      trajdata::ExpertSet experts) {
  Trainer t(std::move(config), std::move(scene), std::move(experts));
  const auto algorithm = static_cast<Algorithm>(r.get<std::uint8_t>());
  const auto seed = r.get<std::uint64_t>();
  if (algorithm != t.config_.algorithm || seed != t.config_.seed) {
    throw Error(Errc::InvalidConfig, "checkpoint was written by a run with a different algorithm or seed");
  }
  t.counters_ = r.get<TrainCounters>();
  t.next_ped_ = static_cast<std::size_t>(r.get<std::uint64_t>());
  t.episode_return_ = r.get<double>();
  t.recent_returns_ = r.get_array<double>();
  t.rmse_ = r.get_array<double>();
  t.rmse_iterations_ = r.get_array<std::int64_t>();
  const auto env_steps = r.get<std::int64_t>();
  const auto flat = r.get_array<std::int64_t>();
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::size_t k = 0; k + 1 < flat.size(); k += 2) pairs.emplace_back(flat[k], flat[k + 1]);
  t.interactions_.restore(env_steps, std::move(pairs));

  simenv::EpisodeSnapshot snap;
  snap.active = r.get<std::uint8_t>() != 0;
  snap.ped_id = r.get<std::int32_t>();
  snap.start_time = r.get<double>();
  snap.goal.x = r.get<double>();
  snap.goal.y = r.get<double>();
  snap.agent.position.x = r.get<double>();
  snap.agent.position.y = r.get<double>();
  snap.agent.heading = r.get<double>();
  snap.agent.speed = r.get<double>();
  snap.step_index = r.get<std::int32_t>();
  snap.terminal = static_cast<simenv::Terminal>(r.get<std::uint8_t>());
  t.env_.restore(snap);
  t.observation_ = r.get<features::FeatureVector>();

  t.rng_.load(r.get_string());
  t.agent_ = sac::SoftActorCritic::load(r);
  t.reward_net_ = neural::Network::load(r);
  t.reward_opt_ = neural::AdamW::load(r);
  t.buffer_ = sac::ReplayBuffer::load(r);
  return t;
}

}  // namespace replayirl::irl
