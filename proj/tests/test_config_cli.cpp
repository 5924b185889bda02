#include <gtest/gtest.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "replayirl/cli.hpp"
#include "replayirl/config.hpp"
#include "support.hpp"

using namespace replayirl;
using testing_support::error_code_of;
using testing_support::scratch_dir;
using testing_support::slurp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "replayirl");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Run r;
  r.code = cli::main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Preprocessed 3-pedestrian crossing scene plus a short run config.
fs::path small_run(const std::string& name, int update_after = 1, const std::string& extra = "") {
  const auto dir = scratch_dir(name);
  write(dir / "scene.manifest", "source = crossing\nframe_dt = 0.04\ncrossing.pedestrians = 3\ncrossing.stagger = 3\n");
  EXPECT_EQ(run_cli({"preprocess", (dir / "scene.manifest").string()}).code, 0);
  write(dir / "run.cfg", "name = r\nmanifest = scene.manifest\nseeds = 1 2\niterations = 10\nrandom_steps = 1\n"
                         "update_after = " + std::to_string(update_after) + "\ncheckpoint_interval = 5\n" + extra +
                         "[irl]\nreward_hidden = 8\nn_expert = 2\nn_buffer = 2\nsegment_len = 8\n"
                         "[sac]\nactor_hidden = 8\ncritic_hidden = 8\nbatch_size = 4\n"
                         "[episode]\nmax_steps = 60\n");
  return dir;
}

std::size_t data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n == 0 ? 0 : n - 1;
}

}  // namespace

TEST(KeyValues, SectionsCommentsAndLists) {
  const auto kv = config::KeyValues::parse("a = 1\n# comment\n[irl]\ngamma = 0.5  # trailing\nhidden = 3 4\n");
  EXPECT_EQ(kv.get_int("a", 0), 1);
  EXPECT_EQ(kv.get_double("irl.gamma", 0), 0.5);
  EXPECT_EQ(kv.get_ints("irl.hidden", {}), (std::vector<int>{3, 4}));
  EXPECT_EQ(kv.get_int("missing", 7), 7);
}

TEST(KeyValues, DuplicateKeyReportsLine) {
  try {
    config::KeyValues::parse("a = 1\nb = 2\na = 3\n", "x.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidConfig);
    EXPECT_NE(std::string(e.what()).find("x.cfg:3"), std::string::npos) << e.what();
  }
}

TEST(KeyValues, MalformedValues) {
  const auto kv = config::KeyValues::parse("a = abc\n");
  EXPECT_EQ(error_code_of([&] { kv.get_double("a", 0); }), Errc::InvalidConfig);
  EXPECT_EQ(error_code_of([] { config::KeyValues::parse("no equals sign\n"); }), Errc::InvalidConfig);
}

TEST(RunConfig, RoundTripThroughKeyValues) {
  const auto kv = config::KeyValues::parse(
      "name = x\ndata = d\nseeds = 3 1 2\niterations = 77\nalgorithm = sac_handcrafted\n"
      "[irl]\ngamma = 0.95\nsigma_t = 0.5\n[sac]\nactor_hidden = 32 16\npolyak = 0.01\n[episode]\nmax_steps = 300\n");
  const auto c = config::RunConfig::from_kv(kv, "/base");
  EXPECT_EQ(c.data, fs::path("/base/d"));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 1, 2}));
  EXPECT_EQ(c.train.iterations, 77);
  EXPECT_EQ(c.train.algorithm, irl::Algorithm::SacHandcrafted);
  EXPECT_EQ(c.train.irl.sigma_t, 0.5);
  EXPECT_EQ(c.train.sac.actor_hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.train.episode.max_steps, 300);
  const auto again = config::RunConfig::from_kv(c.to_kv());
  EXPECT_EQ(again.to_kv().dump(), c.to_kv().dump());
}

TEST(RunConfig, DefaultsMatchTheTrainingSchedule) {
  const auto c = config::RunConfig::from_kv(config::KeyValues::parse("data = d\n"));
  EXPECT_EQ(c.train.irl.i_rl, 1);
  EXPECT_EQ(c.train.irl.i_irl, 3);
  EXPECT_EQ(c.train.irl.n_expert, 16u);
  EXPECT_EQ(c.train.irl.n_buffer, 16u);
  EXPECT_EQ(c.train.irl.optimizer.lr, 1e-4);
  EXPECT_EQ(c.train.sac.optimizer.lr, 3e-4);
  EXPECT_EQ(c.train.sac.optimizer.lr_decay, 0.9999);
  EXPECT_EQ(c.train.sac.batch_size, 512u);
}

TEST(RunConfig, UnknownKeysAndBadValuesRejected) {
  EXPECT_EQ(error_code_of([] { config::RunConfig::from_kv(config::KeyValues::parse("data = d\nbogus = 1\n")); }),
            Errc::InvalidConfig);
  EXPECT_EQ(error_code_of([] { config::RunConfig::from_kv(config::KeyValues::parse("data = d\nalgorithm = ppo\n")); }),
            Errc::InvalidConfig);
  EXPECT_EQ(error_code_of([] { config::RunConfig::from_kv(config::KeyValues::parse("seeds = 1\n")); }),
            Errc::InvalidConfig);
}

TEST(RunConfig, ValidateChecksSeedsAndData) {
  const auto dir = scratch_dir("validate");
  auto c = config::RunConfig::from_kv(config::KeyValues::parse("data = " + dir.string() + "\nseeds = 1 1\n"));
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::InvalidConfig);
  c.seeds = {1, 2};
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::InvalidConfig);
  write(dir / "scene.txt", "");
  write(dir / "experts.txt", "");
  EXPECT_EQ(error_code_of([&] { c.validate(); }), std::nullopt);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"train"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"train", "--config", "/nonexistent/run.cfg"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Cli, PreprocessIsDeterministicAndCachesEveryTrack) {
  const auto dir = scratch_dir("preprocess");
  write(dir / "synth.manifest", "source = synthetic\nsynthetic.seed = 4\nsynthetic.pedestrians = 6\n");
  ASSERT_EQ(run_cli({"preprocess", (dir / "synth.manifest").string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run_cli({"preprocess", (dir / "synth.manifest").string(), "--out", (dir / "b").string()}).code, 0);
  for (const char* f : {"scene.txt", "experts.txt", "cleaning_report.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const auto scene = trajdata::read_scene(dir / "a" / "scene.txt");
  const auto experts = trajdata::read_expert_set(dir / "a" / "experts.txt");
  EXPECT_EQ(experts.size(), scene.tracks.size());
}

TEST(Cli, AllCollidingTracksFailWithEmptyScene) {
  const auto dir = scratch_dir("colliding");
  std::string tracks;
  for (int f = 0; f < 20; ++f) {
    tracks += "1 " + std::to_string(f) + " " + std::to_string(1.0 + 0.1 * f) + " 5\n";
    tracks += "2 " + std::to_string(f) + " " + std::to_string(1.05 + 0.1 * f) + " 5\n";
  }
  write(dir / "tracks.txt", tracks);
  write(dir / "bad.manifest", "source = tracks\ntracks = tracks.txt\n");
  const auto r = run_cli({"preprocess", (dir / "bad.manifest").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("EmptyScene"), std::string::npos) << r.err;
}

TEST(Cli, SmokeTrainLogsEveryIteration) {
  const auto dir = small_run("smoke_train");
  const auto r = run_cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto seed_dir = dir / "out" / "r" / "1";
  EXPECT_EQ(data_rows(seed_dir / "logs" / "sac.csv"), 10u);
  EXPECT_EQ(data_rows(seed_dir / "logs" / "irl.csv"), 3u);
  EXPECT_TRUE(fs::exists(seed_dir / "checkpoints" / "final.bin"));
  EXPECT_TRUE(fs::exists(seed_dir / "config.json"));
  EXPECT_EQ(data_rows(seed_dir / "metrics" / "interactions.csv"), 3u);
}

TEST(Cli, SeedNotInConfigIsUsageError) {
  const auto dir = small_run("bad_seed");
  EXPECT_EQ(run_cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "9"}).code, cli::kExitUsage);
}

TEST(Cli, EvalWritesOneEpisodePerPedestrianAndIsRepeatable) {
  const auto dir = small_run("eval");
  ASSERT_EQ(run_cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "1"}).code, 0);
  const auto cfg = (dir / "run.cfg").string();
  ASSERT_EQ(run_cli({"eval", "--config", cfg, "--seed", "1", "--out", (dir / "e1").string()}).code, 0);
  ASSERT_EQ(run_cli({"eval", "--config", cfg, "--seed", "1", "--out", (dir / "e2").string()}).code, 0);
  EXPECT_EQ(data_rows(dir / "e1" / "episodes_scene_data.csv"), 3u);
  for (const auto& entry : fs::directory_iterator(dir / "e1")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "e2" / entry.path().filename())) << entry.path();
  }
}

TEST(Cli, EmptyEvalSceneFails) {
  const auto dir = small_run("empty_eval");
  ASSERT_EQ(run_cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "1"}).code, 0);
  fs::create_directories(dir / "empty");
  trajdata::write_scene(dir / "empty" / "scene.txt", trajdata::Scene{});
  const auto r = run_cli({"eval", "--config", (dir / "run.cfg").string(), "--seed", "1", "--scene",
                          (dir / "empty").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("EmptyEvalSet"), std::string::npos) << r.err;
}

TEST(Cli, TamperedCheckpointIsRuntimeError) {
  const auto dir = small_run("tamper");
  ASSERT_EQ(run_cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "1"}).code, 0);
  const auto ckpt = dir / "out" / "r" / "1" / "checkpoints" / "final.bin";
  {
    std::fstream f(ckpt, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    f.put('\x7f');
  }
  const auto r = run_cli({"eval", "--config", (dir / "run.cfg").string(), "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("CheckpointVersionMismatch"), std::string::npos) << r.err;
}

TEST(Cli, DivergingRunExitsTwoAndKeepsCheckpoint) {
  // Updates start after the iteration-5 checkpoint; the huge step size then
  // overflows the networks.
  const auto dir = small_run("diverge", 7, "sac.lr = 1e200\n");
  const auto r = run_cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitRuntime) << r.err;
  const auto ck = dir / "out" / "r" / "1" / "checkpoints";
  EXPECT_TRUE(fs::exists(ck / "latest.bin"));
  EXPECT_TRUE(fs::exists(ck / "abort.bin"));
  EXPECT_FALSE(fs::exists(ck / "final.bin"));
}

TEST(Cli, ReportMergesSeedsWithIntervals) {
  const auto run = scratch_dir("report") / "r";
  for (int s : {1, 2, 3}) {
    fs::create_directories(run / std::to_string(s) / "metrics");
    write(run / std::to_string(s) / "metrics" / "goal_success_x.csv", "metric,seed_" + std::to_string(s) +
                                                                          "\ngoal_success," + std::to_string(s) + "\n");
  }
  std::ostringstream summary;
  const auto files = cli::report(run, &summary);
  ASSERT_EQ(files.size(), 1u);
  const auto text = slurp(files[0]);
  EXPECT_NE(text.find("seed_1,seed_2,seed_3,mean,ci_low,ci_high"), std::string::npos) << text;
  const double hw = 1.96 * 1.0 / std::sqrt(3.0);
  std::ostringstream expect;
  expect.precision(12);
  expect << "goal_success,1,2,3,2," << 2 - hw << ',' << 2 + hw;
  EXPECT_NE(text.find(expect.str()), std::string::npos) << text;
}
