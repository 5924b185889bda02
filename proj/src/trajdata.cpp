#include "replayirl/trajdata.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "replayirl/error.hpp"
#include "replayirl/rng.hpp"

namespace replayirl::trajdata {

namespace {

// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Vec2> pts) {
  Vec2 c;
  for (auto p : pts) c = c + p;
  c = (1.0 / static_cast<double>(pts.size())) * c;
  double mean = 0.0;
  for (auto p : pts) mean += distance(p, c);
  mean /= static_cast<double>(pts.size());
  if (mean < 1e-12) throw Error(Errc::DegenerateCorrespondences, "all points coincide");
  const double s = std::numbers::sqrt2 / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1;
  return t;
}

Vec2 transform(const Eigen::Matrix3d& t, Vec2 p) {
  const Eigen::Vector3d q = t * Eigen::Vector3d(p.x, p.y, 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

long frame_key(double t, double frame_dt) { return std::lround(t / frame_dt); }

}  // namespace

Homography::Homography(const Eigen::Matrix3d& h) : h_(h) {
  if (!h_.allFinite() || std::abs(h_.determinant()) <= 1e-9) {
    throw Error(Errc::DegenerateCorrespondences, "homography is not invertible");
  }
  if (std::abs(h_(2, 2)) > 1e-12) h_ /= h_(2, 2);
}

Homography Homography::fit(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size() || src.size() < 4) {
    throw Error(Errc::DegenerateCorrespondences, "need at least 4 matched point pairs");
  }
  if (src.size() == 4) {
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        for (std::size_t k = j + 1; k < 4; ++k) {
          const Vec2 a = src[j] - src[i];
          const Vec2 b = src[k] - src[i];
          const double scale = std::max({a.norm() * b.norm(), 1e-300});
          if (std::abs(a.x * b.y - a.y * b.x) / scale < 1e-9) {
            throw Error(Errc::DegenerateCorrespondences, "three collinear source points");
          }
        }
  }

  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d td = normalizing_transform(dst);
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(2 * n, 8);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 p = transform(ts, src[static_cast<std::size_t>(i)]);
    const Vec2 q = transform(td, dst[static_cast<std::size_t>(i)]);
    a.row(2 * i) << p.x, p.y, 1, 0, 0, 0, -q.x * p.x, -q.x * p.y;
    a.row(2 * i + 1) << 0, 0, 0, p.x, p.y, 1, -q.y * p.x, -q.y * p.y;
    b(2 * i) = q.x;
    b(2 * i + 1) = q.y;
  }

  const Eigen::MatrixXd normal = a.transpose() * a;
  const Eigen::VectorXd rhs = a.transpose() * b;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error(Errc::DegenerateCorrespondences, "singular normal equations");
  const Eigen::VectorXd sol = lu.solve(rhs);

  Eigen::Matrix3d hn;
  hn << sol(0), sol(1), sol(2), sol(3), sol(4), sol(5), sol(6), sol(7), 1.0;
  return Homography(td.inverse() * hn * ts);
}

Vec2 Homography::apply(Vec2 p) const {
  const Eigen::Vector3d q = h_ * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(q.z()) <= 1e-12) throw Error(Errc::PointAtInfinity, "projective denominator vanished");
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

const WorldTrack* Scene::find(int ped_id) const {
  auto it = std::find_if(tracks.begin(), tracks.end(), [&](const WorldTrack& t) { return t.ped_id == ped_id; });
  return it == tracks.end() ? nullptr : &*it;
}

double Scene::duration() const {
  double end = 0.0;
  for (const auto& t : tracks) end = std::max(end, t.end_time());
  return end;
}

std::string CleaningReport::to_json() const {
  nlohmann::ordered_json j;
  j["input_tracks"] = input_tracks;
  j["kept"] = kept;
  j["dropped"] = {{"too_short", dropped_too_short},
                  {"outside_roi", dropped_outside_roi},
                  {"collision", dropped_collision}};
  return j.dump(2) + "\n";
}

std::optional<double> min_simultaneous_distance(const WorldTrack& a, const WorldTrack& b, double frame_dt) {
  if (a.samples.empty() || b.samples.empty()) return std::nullopt;
  if (a.end_time() < b.start_time() || b.end_time() < a.start_time()) return std::nullopt;
  std::optional<double> best;
  std::size_t j = 0;
  for (const auto& sa : a.samples) {
    const long ka = frame_key(sa.t, frame_dt);
    while (j < b.samples.size() && frame_key(b.samples[j].t, frame_dt) < ka) ++j;
    if (j == b.samples.size()) break;
    if (frame_key(b.samples[j].t, frame_dt) == ka) {
      const double d = distance(sa.p, b.samples[j].p);
      if (!best || d < *best) best = d;
    }
  }
  return best;
}

namespace {

CleanResult filter_world_tracks(std::vector<WorldTrack> tracks, const Rect& roi, double frame_dt,
                                double collision_threshold) {
  if (!(collision_threshold > 0.0)) throw Error(Errc::InvalidConfig, "collision threshold must be positive");
  CleanResult out;
  out.report.input_tracks = tracks.size();
  out.scene.frame_dt = frame_dt;
  out.scene.roi = roi;

  std::vector<WorldTrack> candidates;
  for (auto& t : tracks) {
    if (t.samples.size() < 2) {
      ++out.report.dropped_too_short;
      continue;
    }
    const bool inside = std::all_of(t.samples.begin(), t.samples.end(),
                                    [&](const TrackSample& s) { return roi.contains(s.p); });
    if (!inside) {
      ++out.report.dropped_outside_roi;
      continue;
    }
    candidates.push_back(std::move(t));
  }

  std::vector<bool> colliding(candidates.size(), false);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const auto d = min_simultaneous_distance(candidates[i], candidates[j], frame_dt);
      if (d && *d < collision_threshold) colliding[i] = colliding[j] = true;
    }
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (colliding[i]) {
      ++out.report.dropped_collision;
    } else {
      out.scene.tracks.push_back(std::move(candidates[i]));
    }
  }
  out.report.kept = out.scene.tracks.size();
  if (out.scene.tracks.empty()) throw Error(Errc::EmptyScene, "no track survived cleaning");
  return out;
}

}  // namespace

CleanResult clean_scene(std::span<const RawTrack> raw, const Homography& h, const Rect& roi, double frame_dt,
                        double collision_threshold) {
  std::vector<WorldTrack> tracks;
  tracks.reserve(raw.size());
  for (const auto& r : raw) {
    WorldTrack w{r.ped_id, {}};
    w.samples.reserve(r.samples.size());
    for (const auto& s : r.samples) {
      w.samples.push_back({static_cast<double>(s.frame) * frame_dt, h.apply({s.x, s.y})});
    }
    tracks.push_back(std::move(w));
  }
  return filter_world_tracks(std::move(tracks), roi, frame_dt, collision_threshold);
}

CleanResult clean_scene(const Scene& scene, double collision_threshold) {
  return filter_world_tracks(scene.tracks, scene.roi, scene.frame_dt, collision_threshold);
}

namespace {

// Index of the last sample with time <= t; the caller guarantees t is in range.
std::size_t bracket(const WorldTrack& track, double t) {
  auto it = std::upper_bound(track.samples.begin(), track.samples.end(), t,
                             [](double v, const TrackSample& s) { return v < s.t; });
  return static_cast<std::size_t>(std::distance(track.samples.begin(), it)) - 1;
}

}  // namespace

Vec2 interpolate_position(const WorldTrack& track, double t) {
  if (!track.spans(t)) throw Error(Errc::OutOfTrackRange, "t outside track " + std::to_string(track.ped_id));
  const std::size_t i = bracket(track, t);
  if (i + 1 >= track.samples.size() || track.samples[i].t == t) return track.samples[i].p;
  const auto& a = track.samples[i];
  const auto& b = track.samples[i + 1];
  const double u = (t - a.t) / (b.t - a.t);
  return a.p + u * (b.p - a.p);
}

Vec2 track_velocity(const WorldTrack& track, double t) {
  if (!track.spans(t)) throw Error(Errc::OutOfTrackRange, "t outside track " + std::to_string(track.ped_id));
  if (track.samples.size() < 2) return {};
  std::size_t i = bracket(track, t);
  if (i + 1 >= track.samples.size()) i = track.samples.size() - 2;
  const auto& a = track.samples[i];
  const auto& b = track.samples[i + 1];
  return (1.0 / (b.t - a.t)) * (b.p - a.p);
}

Scene generate_synthetic_scene(const SyntheticSceneConfig& config, std::uint64_t seed) {
  if (config.pedestrians <= 0) throw Error(Errc::EmptyScene, "synthetic scene with no pedestrians");
  Rng rng(seed);
  Scene scene;
  scene.frame_dt = config.frame_dt;
  scene.roi = config.roi;
  const Rect inner{config.roi.xmin + config.margin, config.roi.ymin + config.margin,
                   config.roi.xmax - config.margin, config.roi.ymax - config.margin};
  const long total_frames = std::lround(config.duration / config.frame_dt);

  for (int id = 0; id < config.pedestrians; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < config.max_retries && !placed; ++attempt) {
      const Vec2 a{rng.uniform(inner.xmin, inner.xmax), rng.uniform(inner.ymin, inner.ymax)};
      const Vec2 b{rng.uniform(inner.xmin, inner.xmax), rng.uniform(inner.ymin, inner.ymax)};
      const double length = distance(a, b);
      const double speed = rng.uniform(config.speed_min, config.speed_max);
      const double bend = rng.uniform(-config.max_bend, config.max_bend);
      const long frames = std::max(1L, std::lround(length / speed / config.frame_dt));
      if (length < 1.0 || frames >= total_frames) continue;
      const long first = static_cast<long>(rng.index(static_cast<std::size_t>(total_frames - frames)));

      // Quadratic Bezier with the control point pushed sideways; stays inside
      // the ROI because it is a convex combination of inner-rectangle points.
      Vec2 mid = 0.5 * (a + b);
      const Vec2 normal{-(b - a).y / length, (b - a).x / length};
      Vec2 ctrl = mid + (bend * length) * normal;
      ctrl.x = std::clamp(ctrl.x, inner.xmin, inner.xmax);
      ctrl.y = std::clamp(ctrl.y, inner.ymin, inner.ymax);

      WorldTrack track{id, {}};
      for (long k = 0; k <= frames; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(frames);
        const Vec2 p = ((1 - u) * (1 - u)) * a + (2 * u * (1 - u)) * ctrl + (u * u) * b;
        track.samples.push_back({static_cast<double>(first + k) * config.frame_dt, p});
      }
      const bool clear = std::none_of(scene.tracks.begin(), scene.tracks.end(), [&](const WorldTrack& other) {
        const auto d = min_simultaneous_distance(track, other, config.frame_dt);
        return d && *d < config.collision_threshold;
      });
      if (clear) {
        scene.tracks.push_back(std::move(track));
        placed = true;
      }
    }
    if (!placed) {
      throw Error(Errc::GenerationFailed, "could not place pedestrian " + std::to_string(id) + " without collision");
    }
  }
  return scene;
}

Scene crossing_scene(const CrossingSceneConfig& config) {
  if (config.pedestrians <= 0) throw Error(Errc::EmptyScene, "crossing scene with no pedestrians");
  Scene scene;
  scene.frame_dt = config.frame_dt;
  scene.roi = {0.0, 0.0, config.side, config.side};
  const Vec2 center{config.side / 2.0, config.side / 2.0};
  const long frames = std::lround(2.0 * config.radius / config.speed / config.frame_dt);
  const long stagger = std::lround(config.stagger / config.frame_dt);
  for (int i = 0; i < config.pedestrians; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / config.pedestrians;
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    const Vec2 a = center + (-config.radius) * dir;
    const Vec2 b = center + config.radius * dir;
    WorldTrack track{i, {}};
    for (long k = 0; k <= frames; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(frames);
      track.samples.push_back({static_cast<double>(i * stagger + k) * config.frame_dt, a + u * (b - a)});
    }
    scene.tracks.push_back(std::move(track));
  }
  return scene;
}

ExpertSet build_expert_set(const Scene& scene, double sim_dt) {
  ExpertSet experts;
  const double roi_diag = scene.roi.diagonal();
  for (const auto& track : scene.tracks) {
    ExpertTrajectory traj{track.ped_id, {}};
    const long steps = static_cast<long>(std::floor((track.end_time() - track.start_time()) / sim_dt + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      const double t = std::min(track.start_time() + static_cast<double>(k) * sim_dt, track.end_time());
      const Vec2 v = track_velocity(track, t);
      features::Pose pose{interpolate_position(track, t), std::atan2(v.y, v.x),
                          std::min(v.norm(), features::kMaxSpeed)};
      std::vector<features::PedestrianState> peds;
      for (const auto& other : scene.tracks) {
        if (other.ped_id == track.ped_id || !other.spans(t)) continue;
        peds.push_back({interpolate_position(other, t), track_velocity(other, t)});
      }
      traj.states.push_back(features::extract(pose, peds, track.goal(), roi_diag));
    }
    experts.push_back(std::move(traj));
  }
  return experts;
}

// ---- files ----

std::vector<RawTrack> read_track_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open track file " + path.string());
  std::map<int, RawTrack> by_id;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::istringstream ls(line);
    int id = 0;
    RawSample s;
    if (!(ls >> id >> s.frame >> s.x >> s.y)) {
      throw Error(Errc::Io, path.string() + ":" + std::to_string(lineno) + ": expected `ped_id frame x y`");
    }
    auto& track = by_id[id];
    track.ped_id = id;
    if (!track.samples.empty() && s.frame <= track.samples.back().frame) {
      throw Error(Errc::Io, path.string() + ":" + std::to_string(lineno) + ": frame not increasing for ped " +
                                std::to_string(id));
    }
    track.samples.push_back(s);
  }
  std::vector<RawTrack> out;
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  return out;
}

void write_track_file(const std::filesystem::path& path, std::span<const RawTrack> tracks) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.precision(17);
  for (const auto& t : tracks)
    for (const auto& s : t.samples) out << t.ped_id << ' ' << s.frame << ' ' << s.x << ' ' << s.y << '\n';
}

void write_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.precision(17);
  out << "scene " << scene.frame_dt << ' ' << scene.roi.xmin << ' ' << scene.roi.ymin << ' ' << scene.roi.xmax
      << ' ' << scene.roi.ymax << ' ' << scene.tracks.size() << '\n';
  for (const auto& t : scene.tracks) {
    out << "track " << t.ped_id << ' ' << t.samples.size() << '\n';
    for (const auto& s : t.samples) out << s.t << ' ' << s.p.x << ' ' << s.p.y << '\n';
  }
}

Scene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open scene file " + path.string());
  std::string tag;
  Scene scene;
  std::size_t count = 0;
  if (!(in >> tag >> scene.frame_dt >> scene.roi.xmin >> scene.roi.ymin >> scene.roi.xmax >> scene.roi.ymax >>
        count) ||
      tag != "scene") {
    throw Error(Errc::Io, path.string() + ": bad scene header");
  }
  for (std::size_t i = 0; i < count; ++i) {
    WorldTrack t;
    std::size_t n = 0;
    if (!(in >> tag >> t.ped_id >> n) || tag != "track") throw Error(Errc::Io, path.string() + ": bad track header");
    t.samples.resize(n);
    for (auto& s : t.samples) {
      if (!(in >> s.t >> s.p.x >> s.p.y)) throw Error(Errc::Io, path.string() + ": truncated track");
    }
    scene.tracks.push_back(std::move(t));
  }
  return scene;
}

void write_expert_set(const std::filesystem::path& path, const ExpertSet& experts) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.precision(17);
  out << "experts " << experts.size() << ' ' << features::kFeatureDim << '\n';
  for (const auto& e : experts) {
    out << "traj " << e.ped_id << ' ' << e.states.size() << '\n';
    for (const auto& s : e.states) {
      for (std::size_t k = 0; k < s.size(); ++k) out << (k ? " " : "") << s[k];
      out << '\n';
    }
  }
}

ExpertSet read_expert_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open expert cache " + path.string());
  std::string tag;
  std::size_t count = 0;
  std::size_t dim = 0;
  if (!(in >> tag >> count >> dim) || tag != "experts" || dim != features::kFeatureDim) {
    throw Error(Errc::Io, path.string() + ": bad expert cache header");
  }
  ExpertSet experts(count);
  for (auto& e : experts) {
    std::size_t n = 0;
    if (!(in >> tag >> e.ped_id >> n) || tag != "traj") throw Error(Errc::Io, path.string() + ": bad trajectory");
    e.states.resize(n);
    for (auto& s : e.states)
      for (auto& v : s)
        if (!(in >> v)) throw Error(Errc::Io, path.string() + ": truncated trajectory");
  }
  return experts;
}

}  // namespace replayirl::trajdata
