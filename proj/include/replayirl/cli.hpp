#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "replayirl/config.hpp"
#include "replayirl/trajdata.hpp"

namespace replayirl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// ---- scene manifests ----

enum class SceneSource { Tracks, Synthetic, Crossing };

struct Manifest {
  SceneSource source = SceneSource::Tracks;
  std::filesystem::path tracks;  // `ped_id frame x y` file, for SceneSource::Tracks
  double frame_dt = 0.4;
  Rect roi{0.0, 0.0, 10.0, 10.0};
  std::vector<Vec2> homography_src;  // empty: identity
  std::vector<Vec2> homography_dst;
  double collision_threshold = trajdata::kDefaultCollisionThreshold;
  double sim_dt = 0.04;
  std::uint64_t synthetic_seed = 0;
  trajdata::SyntheticSceneConfig synthetic;
  trajdata::CrossingSceneConfig crossing;

  static Manifest parse(const config::KeyValues& kv, const std::filesystem::path& base_dir = {});
  static Manifest read(const std::filesystem::path& path);
};

trajdata::CleanResult build_scene(const Manifest& manifest);

struct PreprocessOutput {
  trajdata::CleaningReport report;
  std::size_t experts = 0;
};

// Writes scene.txt, experts.txt and cleaning_report.json into out_dir.
PreprocessOutput preprocess(const std::filesystem::path& manifest, const std::filesystem::path& out_dir);

// ---- training ----

// Caps run length and sizes so a full pipeline finishes in seconds.
config::RunConfig smoke_config(config::RunConfig c);

struct TrainOptions {
  bool smoke = false;
  // Stop at this iteration without a final checkpoint, as if the process died.
  std::optional<std::int64_t> halt_at;
  unsigned workers = 0;  // 0: one per hardware thread
  std::ostream* progress = nullptr;
};

// Trains one seed under <output>/<name>/<seed>, resuming from
// checkpoints/latest.bin when present.
void train_seed(const config::RunConfig& config, std::uint64_t seed, const TrainOptions& options);

struct SeedOutcome {
  std::uint64_t seed = 0;
  int exit_code = kExitOk;
  std::string message;
};

// Runs every configured seed, in parallel up to options.workers.
std::vector<SeedOutcome> train(const config::RunConfig& config, const TrainOptions& options);

// ---- evaluation and reporting ----

struct EvalOptions {
  std::optional<std::filesystem::path> checkpoint;  // default: <seed dir>/checkpoints/final.bin
  std::optional<std::filesystem::path> scene_dir;   // default: the run's data directory
  std::optional<std::string> dataset;               // default: scene directory name
  std::optional<std::filesystem::path> out_dir;     // default: <seed dir>/metrics
  bool smoke = false;
  bool traces = false;  // per-episode CSV traces under <out>/traces_<dataset>/
};

// Writes proxemics_, goal_success_, drift_ and episodes_<dataset>.csv.
void evaluate_seed(const config::RunConfig& config, std::uint64_t seed, const EvalOptions& options);

// Merges <run>/<seed>/metrics/<metric>.csv across seeds into
// <run>/report/<metric>.csv with mean and 95% interval columns. Returns the
// files written.
std::vector<std::filesystem::path> report(const std::filesystem::path& run_dir, std::ostream* summary = nullptr);

// Command-line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace replayirl::cli
