#pragma once

#include <span>
#include <vector>

#include "replayirl/neural.hpp"
#include "replayirl/replay_buffer.hpp"
#include "replayirl/simenv.hpp"

namespace replayirl::sac {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
// Squashed actions are kept this far inside (-1, 1) so the mapped env action
// stays strictly within its box even when tanh saturates in floating point.
inline constexpr double kSquashLimit = 1.0 - 1e-9;

struct SacConfig {
  std::vector<int> actor_hidden{256, 256};
  std::vector<int> critic_hidden{256, 256};
  neural::AdamWConfig optimizer{3e-4, 0.9999, 1e-4};
  double gamma = 0.99;
  double polyak = 0.005;
  double target_entropy = -static_cast<double>(kActionDim);
  double initial_log_alpha = 0.0;
  std::size_t batch_size = 512;
  std::size_t buffer_capacity = 1'000'000;
};

struct ActResult {
  simenv::Action env_action;
  ActionVec action{};      // squashed, in (-1, 1)
  ActionVec pre_squash{};  // u
  double gaussian_log_prob = 0.0;
  double log_prob = 0.0;  // includes the tanh change of variables
};

struct SacLosses {
  double critic = 0.0;  // sum of both critics' mean squared errors
  double actor = 0.0;
  double temperature = 0.0;
  double alpha = 0.0;
  double mean_log_prob = 0.0;
};

// Standard normal draws used by one update: columns are batch entries.
struct UpdateNoise {
  neural::Matrix next;    // for a' ~ pi(.|s') in the critic target
  neural::Matrix policy;  // for the reparameterized actor loss
};

// Affine map from the squashed box (-1, 1)^2 onto the env action ranges.
simenv::Action to_env_action(const ActionVec& a);

// Per-dimension log(1 - tanh(u)^2), computed without cancellation.
double tanh_log_jacobian(double u);

class SoftActorCritic {
 public:
  SoftActorCritic(const SacConfig& config, std::uint64_t seed);

  ActResult act(const features::FeatureVector& obs, bool deterministic);
  ActResult act_deterministic(const features::FeatureVector& obs) const;

  // log pi(tanh(u) | s) under the current actor for each column pair.
  neural::Vector log_prob(const neural::Matrix& states, const neural::Matrix& pre_squash) const;

  SacLosses update(std::span<const Transition> batch);
  SacLosses update(std::span<const Transition> batch, const UpdateNoise& noise);

  // d(temperature loss)/d(log alpha) for a batch mean of log pi.
  double temperature_gradient(double mean_log_prob) const;

  double alpha() const;
  double log_alpha() const { return log_alpha_(0); }
  const SacConfig& config() const { return config_; }
  const neural::Network& actor() const { return actor_; }
  const neural::Network& critic(int i) const { return i == 0 ? q1_ : q2_; }
  const neural::Network& target_critic(int i) const { return i == 0 ? q1_target_ : q2_target_; }
  neural::Network& actor() { return actor_; }
  neural::Network& critic(int i) { return i == 0 ? q1_ : q2_; }
  neural::Network& target_critic(int i) { return i == 0 ? q1_target_ : q2_target_; }
  void set_log_alpha(double v) { log_alpha_(0) = v; }

  // target <- (1 - polyak) target + polyak online
  void soft_update();

  void save(io::Writer& w) const;
  static SoftActorCritic load(io::Reader& r);

 private:
  SoftActorCritic() = default;

  struct PolicyOutput {
    neural::Matrix mean;
    neural::Matrix log_std;  // clamped
    neural::Matrix raw_log_std;
  };
  PolicyOutput policy_head(const neural::Matrix& out) const;

  SacConfig config_;
  Rng rng_;
  neural::Network actor_, q1_, q2_, q1_target_, q2_target_;
  neural::AdamW actor_opt_, q1_opt_, q2_opt_, alpha_opt_;
  neural::Vector log_alpha_;
};

}  // namespace replayirl::sac
