// Acceptance checks. Usage: acceptance [criterion 1-8]... (no arguments: all).
// Each criterion prints one line "criterion N <name>: PASS|FAIL (<detail>)";
// the exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "replayirl/cli.hpp"
#include "replayirl/config.hpp"
#include "replayirl/error.hpp"
#include "replayirl/evaluation.hpp"
#include "replayirl/irl.hpp"
#include "replayirl/metrics.hpp"
#include "replayirl/neural.hpp"
#include "replayirl/rewards.hpp"
#include "replayirl/simenv.hpp"
#include "replayirl/trajdata.hpp"

namespace fs = std::filesystem;
using namespace replayirl;
using neural::Matrix;
using neural::Vector;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr int kObs = static_cast<int>(features::kFeatureDim);

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("replayirl_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every regular file under dir as (relative path, contents), sorted.
std::vector<std::pair<std::string, std::string>> tree(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Name of the first differing file, or empty when the trees match.
std::string tree_difference(const fs::path& a, const fs::path& b) {
  const auto ta = tree(a);
  const auto tb = tree(b);
  if (ta.size() != tb.size()) return "file count " + std::to_string(ta.size()) + " vs " + std::to_string(tb.size());
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k] != tb[k]) return ta[k].first;
  }
  return {};
}

// 8 straight-line crossings of the empty 10 m x 10 m area.
const char* kToyManifest = "source = crossing\nframe_dt = 0.04\nroi = 0 0 10 10\n";

// Desk-scale network and batch sizes for the end-to-end criteria.
const char* kToySizes =
    "[irl]\nreward_hidden = 64 64\nn_expert = 8\nn_buffer = 8\n"
    "[sac]\nactor_hidden = 64 64\ncritic_hidden = 64 64\nbatch_size = 128\n";

struct ToySetup {
  std::shared_ptr<const trajdata::Scene> scene;
  trajdata::ExpertSet experts;
  irl::TrainConfig train;
};

ToySetup toy_setup(const std::string& top_level, const std::string& sizes = kToySizes) {
  const auto manifest = cli::Manifest::parse(config::KeyValues::parse(kToyManifest));
  ToySetup s;
  s.scene = std::make_shared<const trajdata::Scene>(cli::build_scene(manifest).scene);
  s.experts = trajdata::build_expert_set(*s.scene, manifest.sim_dt);
  s.train = config::RunConfig::from_kv(config::KeyValues::parse("data = unused\n" + top_level + sizes)).train;
  return s;
}

const char* kTinySizes =
    "[irl]\nreward_hidden = 8\nn_expert = 2\nn_buffer = 2\nsegment_len = 8\n"
    "[sac]\nactor_hidden = 8\ncritic_hidden = 8\nbatch_size = 8\n[episode]\nmax_steps = 200\n";

// ---- 1 ----

Outcome gradient_oracles() {
  Rng rng(2024);
  double worst_net = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int in = 1 + static_cast<int>(rng.index(10));
    std::vector<int> hidden;
    for (int d = 0, depth = static_cast<int>(rng.index(3)); d < depth; ++d) {
      hidden.push_back(1 + static_cast<int>(rng.index(10)));
    }
    const int out = 1 + static_cast<int>(rng.index(3));
    auto net = neural::Network::mlp(in, hidden, out, rng);
    for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()(i) += 0.1 * rng.uniform(-1, 1);
    const int batch = 1 + static_cast<int>(rng.index(4));
    Matrix x(in, batch), w(out, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-2, 2);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1, 1);
    neural::Tape tape;
    net.forward(x, &tape);
    const Vector analytic = net.backward(tape, w).params;
    auto f = [&](const Vector& theta) {
      neural::Network n = net;
      n.params() = theta;
      return (n.forward(x).array() * w.array()).sum();
    };
    worst_net = std::max(worst_net,
                         neural::max_relative_error(analytic, neural::finite_difference_gradient(f, net.params())));
  }

  // The IRL objective with a live policy density from a small SAC agent.
  sac::SacConfig sc;
  sc.actor_hidden = {8};
  sc.critic_hidden = {8};
  const sac::SoftActorCritic agent(sc, 5);
  const auto policy = irl::policy_log_density(agent);
  double worst_irl = 0.0;
  long params = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto net = neural::Network::mlp(kObs, std::vector<int>{8}, 1, rng);
    params = net.params().size();
    for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()(i) += 0.1 * rng.uniform(-1, 1);
    irl::IrlConfig cfg;
    cfg.gamma = rng.uniform(0.8, 1.0);
    cfg.sigma_t = rng.uniform(0.5, 2.0);
    auto make = [&](irl::IrlSegment::Source src) {
      irl::IrlSegment s;
      s.source = src;
      const int t0 = static_cast<int>(rng.index(30));
      for (std::size_t k = 0, n = 1 + rng.index(8); k < n; ++k) {
        features::FeatureVector f{};
        for (auto& v : f) v = rng.uniform(-1, 1);
        s.states.push_back(f);
        s.steps.push_back(t0 + static_cast<int>(k));
        if (src == irl::IrlSegment::Source::Buffer) s.pre_squash.push_back({rng.normal(), rng.normal()});
      }
      return s;
    };
    std::vector<irl::IrlSegment> experts, buffer;
    for (int k = 0; k < 4; ++k) experts.push_back(make(irl::IrlSegment::Source::Expert));
    for (int k = 0; k < 4; ++k) buffer.push_back(make(irl::IrlSegment::Source::Buffer));
    const auto o = irl::objective(net, experts, buffer, cfg, policy);
    auto f = [&](const Vector& theta) {
      neural::Network n = net;
      n.params() = theta;
      return irl::objective(n, experts, buffer, cfg, policy).value;
    };
    worst_irl = std::max(worst_irl,
                         neural::max_relative_error(o.gradient, neural::finite_difference_gradient(f, net.params())));
  }
  return {worst_net < 1e-4 && worst_irl < 1e-4 && params <= 200,
          "max rel err: networks " + fmt(worst_net) + ", objective " + fmt(worst_irl) + " with " +
              std::to_string(params) + " params"};
}

// ---- 2 ----

Outcome interaction_law() {
  std::vector<std::pair<std::int64_t, std::int64_t>> reference;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = toy_setup("iterations = 3000\nrandom_steps = 50\nupdate_after = 50\n", kTinySizes);
    s.train.seed = seed;
    irl::Trainer t(s.train, s.scene, s.experts);
    t.run();
    const auto& pairs = t.interactions().pairs();
    if (pairs.size() != 1000) return {false, "seed " + std::to_string(seed) + ": " + std::to_string(pairs.size()) + " pairs"};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [env, updates] = pairs[k];
      if (updates != static_cast<std::int64_t>(k + 1) || env != 3 * updates) {
        return {false, "seed " + std::to_string(seed) + " pair (" + std::to_string(env) + ", " +
                           std::to_string(updates) + ") off the line"};
      }
      ++checked;
    }
    if (reference.empty()) reference = pairs;
    if (pairs != reference) return {false, "seed " + std::to_string(seed) + " differs from seed 1"};
  }
  return {true, std::to_string(checked) + " pairs over 5 seeds on env = 3 x updates"};
}

// ---- 3 ----

Outcome schedule() {
  auto s = toy_setup("iterations = 9\nrandom_steps = 1\nupdate_after = 1\n", kTinySizes);
  s.train.seed = 1;
  irl::Trainer t(s.train, s.scene, s.experts);
  std::ostringstream irl_log, sac_log;
  t.set_log_sinks({&irl_log, &sac_log});
  t.run();
  const auto rows = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
  const auto& c = t.counters();
  const bool ok = c.iteration == 9 && c.policy_updates == 9 && c.reward_updates == 3 && rows(irl_log.str()) == 3 &&
                  rows(sac_log.str()) == 9;
  return {ok, "UpdatePolicy " + std::to_string(c.policy_updates) + ", UpdateReward " +
                  std::to_string(c.reward_updates) + ", log rows " + std::to_string(rows(sac_log.str())) + "/" +
                  std::to_string(rows(irl_log.str()))};
}

// ---- 4 ----

Outcome toy_replay_irl() {
  auto s = toy_setup("iterations = 50000\n");
  int rmse_ok = 0;
  double best_goal = 0.0;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto start = std::chrono::steady_clock::now();
    auto tc = s.train;
    tc.seed = seed;
    irl::Trainer t(tc, s.scene, s.experts);
    t.run();
    const auto windowed = metrics::moving_average(t.feature_rmse_series());
    const auto& its = t.feature_rmse_iterations();
    double early = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < windowed.size() && its[k] <= 1000; ++k, ++n) early += windowed[k];
    early /= static_cast<double>(std::max<std::size_t>(n, 1));
    const double end = windowed.empty() ? 0.0 : windowed.back();
    const double ratio = end / early;
    if (n > 0 && ratio < 0.5) ++rmse_ok;
    const auto episodes = evaluation::evaluate(t.agent(), s.scene, tc.episode);
    const double goal = metrics::goal_success(episodes);
    best_goal = std::max(best_goal, goal);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail += "seed " + std::to_string(seed) + ": rmse end/early " + fmt(end) + "/" + fmt(early) + "=" + fmt(ratio) +
              ", goal " + fmt(goal) + ", " + fmt(secs) + " s; ";
  }
  detail += std::to_string(rmse_ok) + "/3 seeds halve RMSE, best goal_success " + fmt(best_goal);
  return {rmse_ok >= 2 && best_goal >= 0.7, detail};
}

// ---- 5 ----

Outcome baseline_sac() {
  auto s = toy_setup("algorithm = sac_handcrafted\niterations = 200000\nsac.initial_log_alpha = -3\n");
  s.train.seed = 1;
  irl::Trainer t(s.train, s.scene, s.experts);
  constexpr std::int64_t kEvery = 5000;
  double goal = 0.0;
  std::string trail;
  while (t.counters().iteration < s.train.iterations) {
    t.run(t.counters().iteration + kEvery);
    goal = metrics::goal_success(evaluation::evaluate(t.agent(), s.scene, s.train.episode));
    trail += fmt(goal) + " ";
    if (goal >= 0.8) break;
  }
  const auto steps = t.interactions().env_steps();
  return {goal >= 0.8 && steps <= 200000,
          "goal_success " + fmt(goal) + " after " + std::to_string(steps) + " env steps (evals every " +
              std::to_string(kEvery) + ": " + trail + ")"};
}

// ---- 6 ----

Outcome metric_oracles() {
  Rng rng(66);
  int mismatches = 0;
  std::int64_t intrusions = 0;
  for (int trial = 0; trial < 100; ++trial) {
    metrics::EvalEpisode e;
    Vec2 a{rng.uniform(0, 10), rng.uniform(0, 10)};
    for (std::size_t k = 0, steps = 1 + rng.index(200); k < steps; ++k) {
      a = a + Vec2{rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06)};
      e.agent.push_back({0.04 * static_cast<double>(k), a});
      std::vector<Vec2> peds;
      for (std::size_t p = 0, n = rng.index(10); p < n; ++p) {
        // Mix of continuous offsets and exact zone boundaries.
        const double r = rng.index(5) == 0 ? std::vector<double>{0.0, 0.5, 1.2}[rng.index(3)] : rng.uniform(0, 1.6);
        peds.push_back(a + Vec2{r, 0.0});
      }
      e.pedestrians.push_back(std::move(peds));
    }
    metrics::IntrusionCounts oracle;
    for (std::size_t k = 0; k < e.agent.size(); ++k) {
      for (const auto& p : e.pedestrians[k]) {
        const double d = std::hypot(p.x - e.agent[k].position.x, p.y - e.agent[k].position.y);
        if (d >= 0.0 && d <= 0.5) ++oracle.intimate;
        if (d > 0.5 && d <= 1.2) ++oracle.personal;
      }
    }
    const auto got = metrics::proxemic_counts(e);
    if (!(got == oracle)) ++mismatches;
    intrusions += got.intimate + got.personal;
  }
  const double r1 = rewards::r_col(0.1, 0.1), r2 = rewards::r_col(0.3, 0.1), r3 = rewards::r_col(1.0, 0.1);
  const bool triples = r1 == -1.0 && r2 == -0.003 && r3 == 0.0;
  return {mismatches == 0 && triples, std::to_string(mismatches) + " proxemic mismatches over 100 episodes (" +
                                          std::to_string(intrusions) + " intrusions); r_col triples " + fmt(r1) +
                                          " / " + fmt(r2) + " / " + fmt(r3)};
}

// ---- 7 ----

Outcome determinism() {
  const auto dir = fresh_dir("determinism");
  write(dir / "toy.manifest", kToyManifest);
  cli::preprocess(dir / "toy.manifest", dir / "data_a");
  cli::preprocess(dir / "toy.manifest", dir / "data_b");
  if (auto d = tree_difference(dir / "data_a", dir / "data_b"); !d.empty()) return {false, "preprocess differs: " + d};

  write(dir / "run.cfg", std::string("name = det\ndata = data_a\nseeds = 1\niterations = 500\ncheckpoint_interval = 100\n"
                                     "random_steps = 100\nupdate_after = 100\n") +
                             "[irl]\nreward_hidden = 32 32\nn_expert = 4\nn_buffer = 4\n"
                             "[sac]\nactor_hidden = 32 32\ncritic_hidden = 32 32\nbatch_size = 64\n");
  const auto c = config::RunConfig::read(dir / "run.cfg");
  const auto seed_dir = c.seed_dir(1);
  cli::TrainOptions opts;

  cli::train_seed(c, 1, opts);
  fs::rename(seed_dir, dir / "first");
  cli::train_seed(c, 1, opts);
  if (auto d = tree_difference(seed_dir, dir / "first"); !d.empty()) return {false, "train differs: " + d};

  cli::EvalOptions e1, e2;
  e1.out_dir = dir / "eval_1";
  e2.out_dir = dir / "eval_2";
  cli::evaluate_seed(c, 1, e1);
  cli::evaluate_seed(c, 1, e2);
  if (auto d = tree_difference(dir / "eval_1", dir / "eval_2"); !d.empty()) return {false, "eval differs: " + d};

  // Interrupted between checkpoints, then resumed.
  fs::remove_all(seed_dir);
  cli::TrainOptions halted;
  halted.halt_at = 250;
  cli::train_seed(c, 1, halted);
  if (fs::exists(seed_dir / "checkpoints" / "final.bin")) return {false, "halted run wrote final.bin"};
  cli::train_seed(c, 1, opts);
  if (auto d = tree_difference(seed_dir, dir / "first"); !d.empty()) return {false, "resumed run differs: " + d};

  return {true, "preprocess, train (M = 500), eval and halt-at-250 resume byte-identical (" +
                    std::to_string(tree(dir / "first").size()) + " run files)"};
}

// ---- 8 ----

Outcome simulator_physics() {
  trajdata::SyntheticSceneConfig sc;
  sc.pedestrians = 12;
  auto scene = std::make_shared<const trajdata::Scene>(trajdata::generate_synthetic_scene(sc, 8));
  simenv::Environment env(scene);
  Rng rng(88);
  int violations = 0, episodes = 0, absorbed = 0;
  double max_step = 0.0;
  auto begin = [&] {
    const auto& tr = scene->tracks[rng.index(scene->tracks.size())];
    env.reset(tr.ped_id, tr.start_time());
    ++episodes;
  };
  begin();
  for (int n = 0; n < 10000; ++n) {
    const Vec2 before = env.agent().position;
    const double t_before = env.time();
    const simenv::Action act{rng.uniform(-1.0, 3.0), rng.uniform(-600.0, 600.0)};
    const auto o = env.step(act);
    const double moved = distance(before, o.agent_state.position);
    max_step = std::max(max_step, moved);
    if (moved > 0.06 + 1e-12) ++violations;
    if (!(o.agent_state.heading > -std::numbers::pi && o.agent_state.heading <= std::numbers::pi)) ++violations;
    if (o.agent_state.speed < 0.0 || o.agent_state.speed > 1.5) ++violations;
    if (std::abs(env.time() - t_before - 0.04) > 1e-9) ++violations;
    if (o.terminal != simenv::Terminal::Running) {
      const auto snap = env.snapshot();
      bool threw = false;
      try {
        env.step(act);
      } catch (const Error& e) {
        threw = e.code() == Errc::EpisodeFinished;
      }
      const auto after = env.snapshot();
      if (!threw || !(after.agent == snap.agent) || after.step_index != snap.step_index ||
          after.terminal != snap.terminal) {
        ++violations;
      } else {
        ++absorbed;
      }
      begin();
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in 10000 steps over " +
                               std::to_string(episodes) + " episodes, max step " + fmt(max_step) + " m, " +
                               std::to_string(absorbed) + " terminals absorbed"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient oracles", gradient_oracles},
      {2, "sample-efficiency law", interaction_law},
      {3, "update schedule", schedule},
      {4, "toy end-to-end ReplayIRL", toy_replay_irl},
      {5, "baseline SAC sanity", baseline_sac},
      {6, "metric oracles", metric_oracles},
      {7, "determinism suite", determinism},
      {8, "simulator physics", simulator_physics},
  };
  std::vector<int> chosen;
  for (int k = 1; k < argc; ++k) chosen.push_back(std::atoi(argv[k]));
  if (chosen.empty()) {
    for (const auto& c : all) chosen.push_back(c.id);
  }
  int failures = 0;
  for (int id : chosen) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Outcome o;
    try {
      o = it->run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << it->id << ' ' << it->name << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail
              << ")" << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
