#include "replayirl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "replayirl/error.hpp"

namespace replayirl::metrics {

IntrusionCounts proxemic_counts(const EvalEpisode& episode) {
  IntrusionCounts c;
  const std::size_t n = std::min(episode.agent.size(), episode.pedestrians.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (const Vec2& p : episode.pedestrians[k]) {
      const double d = distance(p, episode.agent[k].position);
      if (d <= kIntimateDistance) {
        ++c.intimate;
      } else if (d <= kPersonalDistance) {
        ++c.personal;
      }
    }
  }
  return c;
}

std::vector<DriftPoint> drift(const EvalEpisode& episode, double horizon) {
  std::vector<DriftPoint> out;
  const auto& gt = episode.ground_truth;
  for (const auto& s : episode.agent) {
    if (s.t > horizon + 1e-9) break;
    const double t = std::clamp(episode.start_time + s.t, gt.start_time(), gt.end_time());
    out.push_back({s.t, distance(s.position, trajdata::interpolate_position(gt, t))});
  }
  return out;
}

std::vector<DriftPoint> mean_drift(std::span<const EvalEpisode> episodes, double horizon) {
  std::vector<DriftPoint> sum;
  std::vector<std::size_t> count;
  for (const auto& e : episodes) {
    const auto d = drift(e, horizon);
    if (d.size() > sum.size()) {
      sum.resize(d.size());
      count.resize(d.size(), 0);
    }
    for (std::size_t k = 0; k < d.size(); ++k) {
      sum[k].t = d[k].t;
      sum[k].distance += d[k].distance;
      ++count[k];
    }
  }
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k].distance /= static_cast<double>(count[k]);
  return sum;
}

double goal_success(std::span<const EvalEpisode> episodes) {
  if (episodes.empty()) throw Error(Errc::EmptyEvalSet, "no evaluation episodes");
  const auto hits = std::count_if(episodes.begin(), episodes.end(),
                                  [](const EvalEpisode& e) { return e.terminal == simenv::Terminal::GoalReached; });
  return static_cast<double>(hits) / static_cast<double>(episodes.size());
}

double feature_rmse(std::span<const double> expert_mean, std::span<const double> policy_mean) {
  if (expert_mean.size() != policy_mean.size() || expert_mean.empty()) {
    throw Error(Errc::DimensionMismatch, "feature means differ in dimension");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < expert_mean.size(); ++i) {
    const double d = expert_mean[i] - policy_mean[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(expert_mean.size()));
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = first; k <= i; ++k) sum += series[k];
    out[i] = sum / static_cast<double>(i + 1 - first);
  }
  return out;
}

void InteractionCounter::restore(std::int64_t env_steps, std::vector<std::pair<std::int64_t, std::int64_t>> pairs) {
  env_steps_ = env_steps;
  irl_updates_ = pairs.empty() ? 0 : pairs.back().second;
  pairs_ = std::move(pairs);
}

MeanCi mean_ci95(std::span<const double> values) {
  MeanCi r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

}  // namespace replayirl::metrics
