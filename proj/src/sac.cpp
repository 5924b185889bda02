#include "replayirl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "replayirl/error.hpp"

namespace replayirl::sac {

namespace {

using neural::Matrix;
using neural::Vector;

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)
constexpr int kObsDim = static_cast<int>(features::kFeatureDim);

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double squash(double u) { return std::clamp(std::tanh(u), -kSquashLimit, kSquashLimit); }

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

neural::AdamWConfig without_decay(neural::AdamWConfig c) {
  c.weight_decay = 0.0;
  return c;
}

}  // namespace

simenv::Action to_env_action(const ActionVec& a) {
  return {0.5 * (a[0] + 1.0) * simenv::kMaxSpeed, a[1] * simenv::kMaxHeadingRate};
}

double tanh_log_jacobian(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

SoftActorCritic::SoftActorCritic(const SacConfig& config, std::uint64_t seed) : config_(config), rng_(seed) {
  actor_ = neural::Network::mlp(kObsDim, config_.actor_hidden, 2 * kActionDim, rng_);
  q1_ = neural::Network::mlp(kObsDim + kActionDim, config_.critic_hidden, 1, rng_);
  q2_ = neural::Network::mlp(kObsDim + kActionDim, config_.critic_hidden, 1, rng_);
  q1_target_ = q1_;
  q2_target_ = q2_;
  actor_opt_ = neural::AdamW(static_cast<std::size_t>(actor_.params().size()), config_.optimizer);
  q1_opt_ = neural::AdamW(static_cast<std::size_t>(q1_.params().size()), config_.optimizer);
  q2_opt_ = neural::AdamW(static_cast<std::size_t>(q2_.params().size()), config_.optimizer);
  alpha_opt_ = neural::AdamW(1, without_decay(config_.optimizer));
  log_alpha_ = Vector::Constant(1, config_.initial_log_alpha);
}

double SoftActorCritic::alpha() const { return std::exp(log_alpha_(0)); }

SoftActorCritic::PolicyOutput SoftActorCritic::policy_head(const Matrix& out) const {
  PolicyOutput p;
  p.mean = out.topRows(kActionDim);
  p.raw_log_std = out.bottomRows(kActionDim);
  p.log_std = p.raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return p;
}

ActResult SoftActorCritic::act_deterministic(const features::FeatureVector& obs) const {
  const auto head = policy_head(actor_.forward(std::span<const double>(obs)));
  ActResult r;
  for (int i = 0; i < kActionDim; ++i) {
    const double u = head.mean(i, 0);
    r.pre_squash[i] = u;
    r.action[i] = squash(u);
    r.gaussian_log_prob += -head.log_std(i, 0) - kHalfLog2Pi;
    r.log_prob += -head.log_std(i, 0) - kHalfLog2Pi - tanh_log_jacobian(u);
  }
  r.env_action = to_env_action(r.action);
  return r;
}

ActResult SoftActorCritic::act(const features::FeatureVector& obs, bool deterministic) {
  if (deterministic) return act_deterministic(obs);
  const auto head = policy_head(actor_.forward(std::span<const double>(obs)));
  ActResult r;
  for (int i = 0; i < kActionDim; ++i) {
    const double eps = rng_.normal();
    const double u = head.mean(i, 0) + std::exp(head.log_std(i, 0)) * eps;
    r.pre_squash[i] = u;
    r.action[i] = squash(u);
    const double g = -0.5 * eps * eps - head.log_std(i, 0) - kHalfLog2Pi;
    r.gaussian_log_prob += g;
    r.log_prob += g - tanh_log_jacobian(u);
  }
  r.env_action = to_env_action(r.action);
  return r;
}

Vector SoftActorCritic::log_prob(const Matrix& states, const Matrix& pre_squash) const {
  const auto head = policy_head(actor_.forward(states));
  Vector out = Vector::Zero(states.cols());
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    for (int i = 0; i < kActionDim; ++i) {
      const double u = pre_squash(i, c);
      const double eps = (u - head.mean(i, c)) * std::exp(-head.log_std(i, c));
      out(c) += -0.5 * eps * eps - head.log_std(i, c) - kHalfLog2Pi - tanh_log_jacobian(u);
    }
  }
  return out;
}

double SoftActorCritic::temperature_gradient(double mean_log_prob) const {
  return -(mean_log_prob + config_.target_entropy);
}

SacLosses SoftActorCritic::update(std::span<const Transition> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  UpdateNoise noise{Matrix(kActionDim, n), Matrix(kActionDim, n)};
  for (Eigen::Index c = 0; c < n; ++c)
    for (int i = 0; i < kActionDim; ++i) noise.next(i, c) = rng_.normal();
  for (Eigen::Index c = 0; c < n; ++c)
    for (int i = 0; i < kActionDim; ++i) noise.policy(i, c) = rng_.normal();
  return update(batch, noise);
}

SacLosses SoftActorCritic::update(std::span<const Transition> batch, const UpdateNoise& noise) {
  if (batch.empty()) throw Error(Errc::EmptyBuffer, "empty SAC batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (noise.next.cols() != n || noise.policy.cols() != n) throw Error(Errc::ShapeMismatch, "noise/batch mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix s(kObsDim, n), s_next(kObsDim, n), a(kActionDim, n);
  Vector r(n), mask(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& t = batch[static_cast<std::size_t>(c)];
    if (!t.reward) throw Error(Errc::UnlabeledReward, "transition without reward");
    s.col(c) = Eigen::Map<const Vector>(t.state.data(), kObsDim);
    s_next.col(c) = Eigen::Map<const Vector>(t.next_state.data(), kObsDim);
    a.col(c) = Eigen::Map<const Vector>(t.action.data(), kActionDim);
    r(c) = *t.reward;
    mask(c) = t.bootstrap() ? 1.0 : 0.0;
  }
  const double alpha = this->alpha();
  SacLosses losses;
  losses.alpha = alpha;

  // Critic target from the target networks and a fresh next action.
  Vector target(n);
  {
    const auto head = policy_head(actor_.forward(s_next));
    Matrix a_next(kActionDim, n);
    Vector logp = Vector::Zero(n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (int i = 0; i < kActionDim; ++i) {
        const double eps = noise.next(i, c);
        const double u = head.mean(i, c) + std::exp(head.log_std(i, c)) * eps;
        a_next(i, c) = squash(u);
        logp(c) += -0.5 * eps * eps - head.log_std(i, c) - kHalfLog2Pi - tanh_log_jacobian(u);
      }
    }
    const Matrix sa_next = stack(s_next, a_next);
    const Vector q1 = q1_target_.forward(sa_next).row(0).transpose();
    const Vector q2 = q2_target_.forward(sa_next).row(0).transpose();
    target = r.array() + config_.gamma * mask.array() * (q1.cwiseMin(q2).array() - alpha * logp.array());
  }

  const Matrix sa = stack(s, a);
  for (int k = 0; k < 2; ++k) {
    neural::Network& q = k == 0 ? q1_ : q2_;
    neural::AdamW& opt = k == 0 ? q1_opt_ : q2_opt_;
    neural::Tape tape;
    const Vector diff = q.forward(sa, &tape).row(0).transpose() - target;
    losses.critic += diff.squaredNorm() * inv_n;
    const Matrix cot = (2.0 * inv_n) * diff.transpose();
    opt.step(q.params(), q.backward(tape, cot).params);
  }

  // Reparameterized actor loss against the freshly updated critics.
  neural::Tape actor_tape;
  const auto head = policy_head(actor_.forward(s, &actor_tape));
  Matrix squashed(kActionDim, n), th(kActionDim, n), sigma(kActionDim, n);
  Vector logp = Vector::Zero(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int i = 0; i < kActionDim; ++i) {
      const double eps = noise.policy(i, c);
      const double sd = std::exp(head.log_std(i, c));
      const double u = head.mean(i, c) + sd * eps;
      sigma(i, c) = sd;
      th(i, c) = std::tanh(u);
      squashed(i, c) = squash(u);
      logp(c) += -0.5 * eps * eps - head.log_std(i, c) - kHalfLog2Pi - tanh_log_jacobian(u);
    }
  }
  const Matrix sa_pi = stack(s, squashed);
  neural::Tape t1, t2;
  const Vector q1 = q1_.forward(sa_pi, &t1).row(0).transpose();
  const Vector q2 = q2_.forward(sa_pi, &t2).row(0).transpose();
  Matrix c1 = Matrix::Zero(1, n), c2 = Matrix::Zero(1, n);
  for (Eigen::Index c = 0; c < n; ++c) (q1(c) <= q2(c) ? c1 : c2)(0, c) = 1.0;
  const Matrix dq_da = q1_.backward(t1, c1).input.bottomRows(kActionDim) +
                       q2_.backward(t2, c2).input.bottomRows(kActionDim);
  losses.actor = (alpha * logp.array() - q1.cwiseMin(q2).array()).mean();

  Matrix d_out(2 * kActionDim, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int i = 0; i < kActionDim; ++i) {
      const double t = th(i, c);
      const double du = alpha * 2.0 * t - dq_da(i, c) * (1.0 - t * t);  // d loss / d u
      const double eps = noise.policy(i, c);
      d_out(i, c) = du * inv_n;
      const double raw = head.raw_log_std(i, c);
      const bool live = raw > kLogStdMin && raw < kLogStdMax;
      d_out(kActionDim + i, c) = live ? (du * sigma(i, c) * eps - alpha) * inv_n : 0.0;
    }
  }
  actor_opt_.step(actor_.params(), actor_.backward(actor_tape, d_out).params);

  losses.mean_log_prob = logp.mean();
  losses.temperature = -log_alpha_(0) * (losses.mean_log_prob + config_.target_entropy);
  alpha_opt_.step(log_alpha_, Vector::Constant(1, temperature_gradient(losses.mean_log_prob)));

  soft_update();
  return losses;
}

void SoftActorCritic::soft_update() {
  const double tau = config_.polyak;
  q1_target_.params() = (1.0 - tau) * q1_target_.params() + tau * q1_.params();
  q2_target_.params() = (1.0 - tau) * q2_target_.params() + tau * q2_.params();
}

void SoftActorCritic::save(io::Writer& w) const {
  w.put_array(config_.actor_hidden);
  w.put_array(config_.critic_hidden);
  w.put(config_.optimizer);
  w.put(config_.gamma);
  w.put(config_.polyak);
  w.put(config_.target_entropy);
  w.put(config_.initial_log_alpha);
  w.put<std::uint64_t>(config_.batch_size);
  w.put<std::uint64_t>(config_.buffer_capacity);
  w.put_string(rng_.save());
  for (const auto* net : {&actor_, &q1_, &q2_, &q1_target_, &q2_target_}) net->save(w);
  for (const auto* opt : {&actor_opt_, &q1_opt_, &q2_opt_, &alpha_opt_}) opt->save(w);
  w.put_vector(log_alpha_);
}

SoftActorCritic SoftActorCritic::load(io::Reader& r) {
  SoftActorCritic a;
  a.config_.actor_hidden = r.get_array<int>();
  a.config_.critic_hidden = r.get_array<int>();
  a.config_.optimizer = r.get<neural::AdamWConfig>();
  a.config_.gamma = r.get<double>();
  a.config_.polyak = r.get<double>();
  a.config_.target_entropy = r.get<double>();
  a.config_.initial_log_alpha = r.get<double>();
  a.config_.batch_size = static_cast<std::size_t>(r.get<std::uint64_t>());
  a.config_.buffer_capacity = static_cast<std::size_t>(r.get<std::uint64_t>());
  a.rng_.load(r.get_string());
  for (auto* net : {&a.actor_, &a.q1_, &a.q2_, &a.q1_target_, &a.q2_target_}) *net = neural::Network::load(r);
  for (auto* opt : {&a.actor_opt_, &a.q1_opt_, &a.q2_opt_, &a.alpha_opt_}) *opt = neural::AdamW::load(r);
  a.log_alpha_ = r.get_vector();
  return a;
}

}  // namespace replayirl::sac
