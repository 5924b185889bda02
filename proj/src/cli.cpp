#include "replayirl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "replayirl/error.hpp"
#include "replayirl/evaluation.hpp"
#include "replayirl/irl.hpp"
#include "replayirl/metrics.hpp"

namespace replayirl::cli {

namespace fs = std::filesystem;

namespace {

constexpr char kRunTag[9] = "RIRLRUN_";
constexpr std::uint32_t kRunVersion = 1;

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::vector<Vec2> points(const config::KeyValues& kv, const std::string& key) {
  const auto v = kv.get_doubles(key);
  if (v.size() % 2 != 0) throw Error(Errc::InvalidConfig, key + " needs an even number of coordinates");
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < v.size(); k += 2) out.push_back({v[k], v[k + 1]});
  return out;
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(p, std::ios::out | mode);
  if (!out) throw Error(Errc::Io, "cannot write " + p.string());
  out << std::setprecision(12);
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  auto out = open_out(p);
  out << text;
}

// Training parameters that must match between a checkpoint and the run resuming it.
std::string resume_fingerprint(const config::RunConfig& c) {
  auto kv = c.to_kv();
  config::KeyValues kept;
  for (const auto& [k, v] : kv.entries()) {
    if (k == "name" || k == "manifest" || k == "data" || k == "seeds" || k == "output") continue;
    kept.set(k, v);
  }
  return kept.dump();
}

struct RunState {
  std::uint64_t irl_log_bytes = 0;
  std::uint64_t sac_log_bytes = 0;
};

void write_checkpoint(const fs::path& path, const config::RunConfig& c, const RunState& s,
                      const irl::Trainer& trainer) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    io::Writer w(out);
    w.put_tag(kRunTag, kRunVersion);
    w.put_string(resume_fingerprint(c));
    w.put(s.irl_log_bytes);
    w.put(s.sac_log_bytes);
    trainer.save(w);
    if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct LoadedRun {
  RunState state;
  irl::Trainer trainer;
};

LoadedRun read_checkpoint(const fs::path& path, const config::RunConfig& c, irl::TrainConfig tc,
                          std::shared_ptr<const trajdata::Scene> scene, trajdata::ExpertSet experts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open checkpoint " + path.string());
  io::Reader r(in);
  r.expect_tag(kRunTag, kRunVersion);
  if (r.get_string() != resume_fingerprint(c)) {
    throw Error(Errc::InvalidConfig, path.string() + " was written with different training parameters");
  }
  RunState s;
  s.irl_log_bytes = r.get<std::uint64_t>();
  s.sac_log_bytes = r.get<std::uint64_t>();
  return {s, irl::Trainer::load(r, std::move(tc), std::move(scene), std::move(experts))};
}

struct RunData {
  std::shared_ptr<const trajdata::Scene> scene;
  trajdata::ExpertSet experts;
};

RunData load_data(const fs::path& dir) {
  RunData d;
  d.scene = std::make_shared<const trajdata::Scene>(trajdata::read_scene(dir / "scene.txt"));
  d.experts = trajdata::read_expert_set(dir / "experts.txt");
  return d;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

// ---- manifests and preprocessing ----

Manifest Manifest::parse(const config::KeyValues& kv, const fs::path& base_dir) {
  kv.reject_unknown({"source", "tracks", "frame_dt", "roi", "homography_src", "homography_dst",
                     "collision_threshold", "sim_dt", "synthetic.seed", "synthetic.pedestrians",
                     "synthetic.speed_min", "synthetic.speed_max", "synthetic.duration", "synthetic.margin",
                     "synthetic.max_bend", "synthetic.max_retries", "crossing.pedestrians", "crossing.side",
                     "crossing.radius", "crossing.speed", "crossing.stagger"});
  Manifest m;
  const auto source = kv.get_string("source", "tracks");
  if (source == "tracks") {
    m.source = SceneSource::Tracks;
  } else if (source == "synthetic") {
    m.source = SceneSource::Synthetic;
  } else if (source == "crossing") {
    m.source = SceneSource::Crossing;
  } else {
    throw Error(Errc::InvalidConfig, "unknown scene source '" + source + "'");
  }
  if (auto t = kv.get("tracks")) m.tracks = resolve(base_dir, *t);
  if (m.source == SceneSource::Tracks && m.tracks.empty()) {
    throw Error(Errc::InvalidConfig, "a tracks manifest needs 'tracks'");
  }
  m.frame_dt = kv.get_double("frame_dt", m.frame_dt);
  if (kv.has("roi")) {
    const auto r = kv.get_doubles("roi");
    if (r.size() != 4 || !(r[0] < r[2]) || !(r[1] < r[3])) {
      throw Error(Errc::InvalidConfig, "roi must be 'xmin ymin xmax ymax' with xmin < xmax and ymin < ymax");
    }
    m.roi = {r[0], r[1], r[2], r[3]};
  }
  m.homography_src = points(kv, "homography_src");
  m.homography_dst = points(kv, "homography_dst");
  if (m.homography_src.size() != m.homography_dst.size()) {
    throw Error(Errc::InvalidConfig, "homography_src and homography_dst differ in length");
  }
  m.collision_threshold = kv.get_double("collision_threshold", m.collision_threshold);
  m.sim_dt = kv.get_double("sim_dt", m.sim_dt);
  if (!(m.frame_dt > 0.0) || !(m.sim_dt > 0.0)) throw Error(Errc::InvalidConfig, "time steps must be positive");

  auto& s = m.synthetic;
  m.synthetic_seed = static_cast<std::uint64_t>(kv.get_int("synthetic.seed", 0));
  s.roi = m.roi;
  s.frame_dt = m.frame_dt;
  s.collision_threshold = m.collision_threshold;
  s.pedestrians = static_cast<int>(kv.get_int("synthetic.pedestrians", s.pedestrians));
  s.speed_min = kv.get_double("synthetic.speed_min", s.speed_min);
  s.speed_max = kv.get_double("synthetic.speed_max", s.speed_max);
  s.duration = kv.get_double("synthetic.duration", s.duration);
  s.margin = kv.get_double("synthetic.margin", s.margin);
  s.max_bend = kv.get_double("synthetic.max_bend", s.max_bend);
  s.max_retries = static_cast<int>(kv.get_int("synthetic.max_retries", s.max_retries));

  auto& x = m.crossing;
  x.frame_dt = m.frame_dt;
  x.pedestrians = static_cast<int>(kv.get_int("crossing.pedestrians", x.pedestrians));
  x.side = kv.get_double("crossing.side", x.side);
  x.radius = kv.get_double("crossing.radius", x.radius);
  x.speed = kv.get_double("crossing.speed", x.speed);
  x.stagger = kv.get_double("crossing.stagger", x.stagger);
  return m;
}

Manifest Manifest::read(const fs::path& path) { return parse(config::KeyValues::read(path), path.parent_path()); }

trajdata::CleanResult build_scene(const Manifest& m) {
  switch (m.source) {
    case SceneSource::Tracks: {
      const auto raw = trajdata::read_track_file(m.tracks);
      const auto h = m.homography_src.empty() ? trajdata::Homography()
                                              : trajdata::Homography::fit(m.homography_src, m.homography_dst);
      return trajdata::clean_scene(raw, h, m.roi, m.frame_dt, m.collision_threshold);
    }
    case SceneSource::Synthetic:
      return trajdata::clean_scene(trajdata::generate_synthetic_scene(m.synthetic, m.synthetic_seed),
                                   m.collision_threshold);
    case SceneSource::Crossing:
      return trajdata::clean_scene(trajdata::crossing_scene(m.crossing), m.collision_threshold);
  }
  throw Error(Errc::InvalidConfig, "unknown scene source");
}

PreprocessOutput preprocess(const fs::path& manifest, const fs::path& out_dir) {
  const auto m = Manifest::read(manifest);
  const auto cleaned = build_scene(m);
  const auto experts = trajdata::build_expert_set(cleaned.scene, m.sim_dt);
  fs::create_directories(out_dir);
  trajdata::write_scene(out_dir / "scene.txt", cleaned.scene);
  trajdata::write_expert_set(out_dir / "experts.txt", experts);
  write_text(out_dir / "cleaning_report.json", cleaned.report.to_json());
  return {cleaned.report, experts.size()};
}

// ---- training ----

config::RunConfig smoke_config(config::RunConfig c) {
  auto& t = c.train;
  auto cap = [](auto& v, auto limit) { v = std::min(v, static_cast<std::decay_t<decltype(v)>>(limit)); };
  cap(t.iterations, 60);
  cap(t.random_steps, 20);
  cap(t.update_after, 20);
  cap(t.sac.batch_size, 32);
  cap(t.irl.n_expert, 4);
  cap(t.irl.n_buffer, 4);
  cap(t.irl.segment_len, 16);
  cap(t.episode.max_steps, 100);
  for (auto* h : {&t.irl.reward_hidden, &t.sac.actor_hidden, &t.sac.critic_hidden}) {
    for (int& w : *h) cap(w, 16);
  }
  if (c.checkpoint_interval > 0) cap(c.checkpoint_interval, 20);
  return c;
}

void train_seed(const config::RunConfig& base, std::uint64_t seed, const TrainOptions& options) {
  const auto c = options.smoke ? smoke_config(base) : base;
  c.validate();
  const fs::path dir = c.seed_dir(seed);
  for (const char* sub : {"checkpoints", "logs", "metrics"}) fs::create_directories(dir / sub);
  write_text(dir / "config.json", c.to_json());

  auto data = load_data(c.data);
  auto tc = c.train;
  tc.seed = seed;

  const fs::path latest = dir / "checkpoints" / "latest.bin";
  const fs::path irl_log = dir / "logs" / "irl.csv";
  const fs::path sac_log = dir / "logs" / "sac.csv";
  std::optional<irl::Trainer> trainer;
  RunState state;
  if (fs::exists(latest)) {
    auto loaded = read_checkpoint(latest, c, tc, data.scene, data.experts);
    state = loaded.state;
    trainer.emplace(std::move(loaded.trainer));
    // Rows written after the checkpoint are regenerated identically.
    fs::resize_file(irl_log, state.irl_log_bytes);
    fs::resize_file(sac_log, state.sac_log_bytes);
  } else {
    trainer.emplace(tc, data.scene, data.experts);
    auto irl_head = open_out(irl_log);
    irl::write_irl_log_header(irl_head);
    auto sac_head = open_out(sac_log);
    irl::write_sac_log_header(sac_head);
  }

  auto irl_out = open_out(irl_log, std::ios::app);
  auto sac_out = open_out(sac_log, std::ios::app);
  trainer->set_log_sinks({&irl_out, &sac_out});
  auto checkpoint = [&] {
    irl_out.flush();
    sac_out.flush();
    state.irl_log_bytes = fs::file_size(irl_log);
    state.sac_log_bytes = fs::file_size(sac_log);
    write_checkpoint(latest, c, state, *trainer);
  };

  const std::int64_t total = tc.iterations;
  const std::int64_t tick = std::max<std::int64_t>(total / 10, 1);
  try {
    while (trainer->counters().iteration < total) {
      if (options.halt_at && trainer->counters().iteration >= *options.halt_at) return;
      trainer->iterate();
      const auto m = trainer->counters().iteration;
      if (c.checkpoint_interval > 0 && m % c.checkpoint_interval == 0) checkpoint();
      if (options.progress != nullptr && m % tick == 0) {
        *options.progress << "seed " << seed << ": iteration " << m << "/" << total << '\n';
      }
    }
  } catch (const std::exception&) {
    // latest.bin keeps the last complete iteration boundary for resuming;
    // the failing state goes next to it for inspection.
    irl_out.flush();
    sac_out.flush();
    try {
      RunState at_failure = state;
      at_failure.irl_log_bytes = fs::file_size(irl_log);
      at_failure.sac_log_bytes = fs::file_size(sac_log);
      write_checkpoint(dir / "checkpoints" / "abort.bin", c, at_failure, *trainer);
    } catch (const std::exception&) {
    }
    throw;
  }
  checkpoint();
  fs::copy_file(latest, dir / "checkpoints" / "final.bin", fs::copy_options::overwrite_existing);

  if (tc.algorithm == irl::Algorithm::ReplayIrl) {
    const auto& series = trainer->feature_rmse_series();
    const auto& its = trainer->feature_rmse_iterations();
    const auto avg = metrics::moving_average(series);
    auto rmse = open_out(dir / "metrics" / "feature_rmse.csv");
    rmse << "iteration,seed_" << seed << '\n';
    for (std::size_t k = 0; k < avg.size(); ++k) rmse << its[k] << ',' << avg[k] << '\n';
    auto inter = open_out(dir / "metrics" / "interactions.csv");
    inter << "irl_updates,seed_" << seed << '\n';
    for (const auto& [env, upd] : trainer->interactions().pairs()) inter << upd << ',' << env << '\n';
  }
}

std::vector<SeedOutcome> train(const config::RunConfig& config, const TrainOptions& options) {
  std::vector<SeedOutcome> outcomes(config.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      auto& o = outcomes[k];
      o.seed = config.seeds[k];
      std::ostringstream progress;
      TrainOptions local = options;
      local.progress = options.progress != nullptr ? &progress : nullptr;
      try {
        train_seed(config, o.seed, local);
      } catch (const Error& e) {
        o.exit_code = e.code() == Errc::InvalidConfig ? kExitUsage : kExitRuntime;
        o.message = e.what();
      } catch (const std::exception& e) {
        o.exit_code = kExitRuntime;
        o.message = e.what();
      }
      if (options.progress != nullptr) {
        std::lock_guard lock(progress_mutex);
        *options.progress << progress.str();
      }
    }
  };

  unsigned workers = options.workers != 0 ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.seeds.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return outcomes;
}

// ---- evaluation ----

void evaluate_seed(const config::RunConfig& base, std::uint64_t seed, const EvalOptions& options) {
  const auto c = options.smoke ? smoke_config(base) : base;
  const fs::path dir = c.seed_dir(seed);
  const fs::path ckpt = options.checkpoint.value_or(dir / "checkpoints" / "final.bin");
  const fs::path scene_dir = options.scene_dir.value_or(c.data);
  std::string dataset = options.dataset.value_or(scene_dir.lexically_normal().filename().string());
  if (dataset.empty()) dataset = scene_dir.lexically_normal().parent_path().filename().string();
  const fs::path out_dir = options.out_dir.value_or(dir / "metrics");

  auto train_data = load_data(c.data);
  auto tc = c.train;
  tc.seed = seed;
  const auto run = read_checkpoint(ckpt, c, tc, train_data.scene, train_data.experts);
  const auto scene = std::make_shared<const trajdata::Scene>(trajdata::read_scene(scene_dir / "scene.txt"));

  std::optional<std::size_t> limit;
  if (options.smoke) limit = 2;
  const auto episodes = evaluation::evaluate(run.trainer.agent(), scene, c.train.episode, limit);
  fs::create_directories(out_dir);

  const std::string col = "seed_" + std::to_string(seed);
  double intimate = 0.0, personal = 0.0;
  {
    auto out = open_out(out_dir / ("episodes_" + dataset + ".csv"));
    out << "ped_id,terminal,steps,intimate,personal\n";
    for (const auto& ep : episodes) {
      const auto counts = metrics::proxemic_counts(ep);
      intimate += static_cast<double>(counts.intimate);
      personal += static_cast<double>(counts.personal);
      out << ep.ped_id << ',' << simenv::terminal_name(ep.terminal) << ',' << ep.agent.size() - 1 << ','
          << counts.intimate << ',' << counts.personal << '\n';
    }
  }
  const double n = static_cast<double>(episodes.size());
  {
    auto out = open_out(out_dir / ("proxemics_" + dataset + ".csv"));
    out << "zone," << col << '\n' << "intimate," << intimate / n << '\n' << "personal," << personal / n << '\n';
  }
  {
    auto out = open_out(out_dir / ("goal_success_" + dataset + ".csv"));
    out << "metric," << col << '\n' << "goal_success," << metrics::goal_success(episodes) << '\n';
  }
  {
    auto out = open_out(out_dir / ("drift_" + dataset + ".csv"));
    out << "t," << col << '\n';
    for (const auto& p : metrics::mean_drift(episodes)) out << p.t << ',' << p.distance << '\n';
  }
  if (options.traces) {
    const fs::path traces = out_dir / ("traces_" + dataset);
    fs::create_directories(traces);
    for (const auto& ep : episodes) {
      auto out = open_out(traces / ("ped_" + std::to_string(ep.ped_id) + ".csv"));
      simenv::TraceWriter writer(out);
      evaluation::rollout(run.trainer.agent(), scene, ep.ped_id, c.train.episode, &writer);
    }
  }
}

// ---- report ----

std::vector<fs::path> report(const fs::path& run_dir, std::ostream* summary) {
  if (!fs::is_directory(run_dir)) throw Error(Errc::InvalidConfig, "no run directory " + run_dir.string());
  std::vector<fs::path> seed_dirs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && !name.empty() && std::all_of(name.begin(), name.end(), ::isdigit)) {
      seed_dirs.push_back(entry.path());
    }
  }
  std::sort(seed_dirs.begin(), seed_dirs.end(), [](const fs::path& a, const fs::path& b) {
    return std::stoull(a.filename().string()) < std::stoull(b.filename().string());
  });

  // metric file -> key column name, ordered keys, per-seed (column, values by key)
  struct Table {
    std::string key_name;
    std::vector<std::string> keys;
    std::vector<std::string> columns;
    std::map<std::string, std::map<std::string, double>> values;  // key -> column -> value
  };
  std::map<std::string, Table> tables;
  for (const auto& sd : seed_dirs) {
    const fs::path mdir = sd / "metrics";
    if (!fs::is_directory(mdir)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(mdir)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::string line;
      if (!std::getline(in, line)) continue;
      const auto header = split_csv(line);
      if (header.size() != 2) continue;
      auto& t = tables[f.filename().string()];
      if (t.key_name.empty()) t.key_name = header[0];
      t.columns.push_back(header[1]);
      while (std::getline(in, line)) {
        const auto cells = split_csv(line);
        if (cells.size() != 2) throw Error(Errc::Io, f.string() + ": malformed row '" + line + "'");
        if (!t.values.count(cells[0])) t.keys.push_back(cells[0]);
        t.values[cells[0]][header[1]] = std::stod(cells[1]);
      }
    }
  }

  std::vector<fs::path> written;
  const fs::path out_dir = run_dir / "report";
  if (!tables.empty()) fs::create_directories(out_dir);
  for (const auto& [name, t] : tables) {
    const fs::path p = out_dir / name;
    auto out = open_out(p);
    out << t.key_name;
    for (const auto& c : t.columns) out << ',' << c;
    out << ",mean,ci_low,ci_high\n";
    for (const auto& key : t.keys) {
      const auto& row = t.values.at(key);
      std::vector<double> vals;
      out << key;
      for (const auto& c : t.columns) {
        out << ',';
        if (auto it = row.find(c); it != row.end()) {
          out << it->second;
          vals.push_back(it->second);
        }
      }
      const auto ci = metrics::mean_ci95(vals);
      out << ',' << ci.mean << ',' << ci.mean - ci.half_width << ',' << ci.mean + ci.half_width << '\n';
      if (summary != nullptr && t.keys.size() <= 2) {
        *summary << name << ' ' << key << ": " << ci.mean << " +/- " << ci.half_width << " (" << vals.size()
                 << " seeds)\n";
      }
    }
    written.push_back(p);
  }
  return written;
}

// ---- command line ----

namespace {

int exit_code_for(const Error& e) { return e.code() == Errc::InvalidConfig ? kExitUsage : kExitRuntime; }

std::vector<std::uint64_t> selected_seeds(const config::RunConfig& c, const std::vector<std::uint64_t>& only) {
  if (only.empty()) return c.seeds;
  for (auto s : only) {
    if (std::find(c.seeds.begin(), c.seeds.end(), s) == c.seeds.end()) {
      throw Error(Errc::InvalidConfig, "seed " + std::to_string(s) + " is not listed in the config");
    }
  }
  return only;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replay-buffer inverse reinforcement learning for crowd navigation"};
  app.require_subcommand(1);

  std::string manifest, out;
  auto* pre = app.add_subcommand("preprocess", "Clean a scene and extract expert features");
  pre->add_option("manifest", manifest, "Scene manifest")->required();
  pre->add_option("--out", out, "Output directory (default: <manifest stem>_data next to the manifest)");

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  bool smoke = false;
  unsigned workers = 0;
  auto* tr = app.add_subcommand("train", "Train every configured seed");
  tr->add_option("--config", config_path, "Run config")->required();
  tr->add_option("--seed", seeds, "Restrict to these seeds");
  tr->add_flag("--smoke", smoke, "Tiny run for pipeline checks");
  tr->add_option("--workers", workers, "Parallel seeds (default: hardware threads)");

  std::string checkpoint, scene_dir, dataset, eval_out;
  bool traces = false;
  auto* ev = app.add_subcommand("eval", "Roll out trained policies and write metric CSVs");
  ev->add_option("--config", config_path, "Run config")->required();
  ev->add_option("--seed", seeds, "Restrict to these seeds");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint (needs exactly one seed)");
  ev->add_option("--scene", scene_dir, "Preprocessed scene directory to evaluate on");
  ev->add_option("--dataset", dataset, "Dataset label used in output file names");
  ev->add_option("--out", eval_out, "Metrics directory (needs exactly one seed)");
  ev->add_flag("--smoke", smoke, "Evaluate two episodes with the smoke config");
  ev->add_flag("--traces", traces, "Write per-episode trajectory CSVs");

  std::string run_dir;
  auto* rep = app.add_subcommand("report", "Aggregate per-seed metrics with 95% intervals");
  auto* rep_cfg = rep->add_option("--config", config_path, "Run config");
  auto* rep_run = rep->add_option("--run", run_dir, "Run directory (<output>/<name>)");
  rep_cfg->excludes(rep_run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (pre->parsed()) {
      const fs::path dest = out.empty() ? config::default_data_dir(manifest) : fs::path(out);
      const auto result = preprocess(manifest, dest);
      std::cout << "kept " << result.report.kept << " of " << result.report.input_tracks << " tracks; wrote "
                << dest.string() << '\n';
      return kExitOk;
    }
    if (tr->parsed()) {
      auto c = config::RunConfig::read(config_path);
      c.seeds = selected_seeds(c, seeds);
      c.validate();
      TrainOptions options;
      options.smoke = smoke;
      options.workers = workers;
      options.progress = &std::cout;
      int rc = kExitOk;
      for (const auto& o : train(c, options)) {
        if (o.exit_code != kExitOk) {
          std::cerr << "seed " << o.seed << " failed: " << o.message << '\n';
          rc = rc == kExitUsage ? rc : o.exit_code;
        }
      }
      return rc;
    }
    if (ev->parsed()) {
      const auto c = config::RunConfig::read(config_path);
      const auto chosen = selected_seeds(c, seeds);
      if ((!checkpoint.empty() || !eval_out.empty()) && chosen.size() != 1) {
        throw Error(Errc::InvalidConfig, "--checkpoint and --out need exactly one --seed");
      }
      EvalOptions options;
      if (!checkpoint.empty()) options.checkpoint = checkpoint;
      if (!scene_dir.empty()) options.scene_dir = scene_dir;
      if (!dataset.empty()) options.dataset = dataset;
      if (!eval_out.empty()) options.out_dir = eval_out;
      options.smoke = smoke;
      options.traces = traces;
      for (auto s : chosen) evaluate_seed(c, s, options);
      return kExitOk;
    }
    if (rep->parsed()) {
      fs::path dir = run_dir;
      if (dir.empty()) {
        if (config_path.empty()) throw Error(Errc::InvalidConfig, "report needs --config or --run");
        const auto c = config::RunConfig::read(config_path);
        dir = c.output / c.name;
      }
      const auto files = report(dir, &std::cout);
      std::cout << "wrote " << files.size() << " report files to " << (dir / "report").string() << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace replayirl::cli
