#include "replayirl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "replayirl/error.hpp"

namespace replayirl::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

std::string format_double(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream o;
  o.precision(17);
  for (std::size_t k = 0; k < v.size(); ++k) o << (k ? " " : "") << v[k];
  return o.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::string section;
  std::istringstream in{std::string(text)};
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::InvalidConfig, where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw Error(Errc::InvalidConfig, where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidConfig, where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw Error(Errc::InvalidConfig, where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.entries_.count(full)) throw Error(Errc::InvalidConfig, where + ": duplicate key '" + full + "'");
    kv.entries_[full] = trim(std::string_view(line).substr(eq + 1));
    kv.lines_[full] = lineno;
  }
  return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidConfig, "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

void KeyValues::fail(const std::string& key, const std::string& why) const {
  std::string where = origin_;
  if (auto it = lines_.find(key); it != lines_.end()) where += ":" + std::to_string(it->second);
  throw Error(Errc::InvalidConfig, where + ": " + key + ": " + why);
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  if (!parse_number(*v, out)) fail(key, "expected a number, got '" + *v + "'");
  return out;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  if (!parse_number(*v, out)) fail(key, "expected an integer, got '" + *v + "'");
  return out;
}

std::vector<double> KeyValues::get_doubles(const std::string& key) const {
  std::vector<double> out;
  const auto v = get(key);
  if (!v) return out;
  for (const auto& tok : split_ws(*v)) {
    double d = 0.0;
    if (!parse_number(tok, d)) fail(key, "expected numbers, got '" + tok + "'");
    out.push_back(d);
  }
  return out;
}

std::vector<int> KeyValues::get_ints(const std::string& key, std::vector<int> fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<int> out;
  for (const auto& tok : split_ws(*v)) {
    int d = 0;
    if (!parse_number(tok, d)) fail(key, "expected integers, got '" + tok + "'");
    out.push_back(d);
  }
  return out;
}

void KeyValues::reject_unknown(const std::set<std::string>& known) const {
  for (const auto& [k, v] : entries_) {
    if (!known.count(k)) fail(k, "unknown key");
  }
}

std::string KeyValues::dump() const {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      by_section[""].emplace_back(k, v);
    } else {
      by_section[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
  }
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, items] : by_section) {
    if (!section.empty()) out << (first ? "" : "\n") << '[' << section << "]\n";
    for (const auto& [k, v] : items) out << k << " = " << v << '\n';
    first = false;
  }
  return out.str();
}

std::string algorithm_name(irl::Algorithm a) {
  return a == irl::Algorithm::ReplayIrl ? "replay_irl" : "sac_handcrafted";
}

irl::Algorithm parse_algorithm(const std::string& s) {
  if (s == "replay_irl") return irl::Algorithm::ReplayIrl;
  if (s == "sac_handcrafted") return irl::Algorithm::SacHandcrafted;
  throw Error(Errc::InvalidConfig, "unknown algorithm '" + s + "' (expected replay_irl or sac_handcrafted)");
}

std::filesystem::path default_data_dir(const std::filesystem::path& manifest) {
  return manifest.parent_path() / (manifest.stem().string() + "_data");
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name", "manifest", "data", "seeds", "output", "iterations", "checkpoint_interval", "algorithm",
      "random_steps", "update_after",
      "irl.gamma", "irl.sigma_t", "irl.n_expert", "irl.n_buffer", "irl.i_rl", "irl.i_irl", "irl.segment_len",
      "irl.reward_hidden", "irl.lr", "irl.lr_decay", "irl.weight_decay",
      "sac.actor_hidden", "sac.critic_hidden", "sac.lr", "sac.lr_decay", "sac.weight_decay", "sac.gamma",
      "sac.polyak", "sac.target_entropy", "sac.initial_log_alpha", "sac.batch_size", "sac.buffer_capacity",
      "episode.dt", "episode.goal_radius", "episode.max_steps", "episode.pedestrian_radius"};
  return keys;
}

std::size_t non_negative(const KeyValues& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw Error(Errc::InvalidConfig, key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

RunConfig RunConfig::from_kv(const KeyValues& kv, const std::filesystem::path& base_dir) {
  kv.reject_unknown(known_keys());
  RunConfig c;
  c.name = kv.get_string("name", c.name);
  if (c.name.empty() || c.name.find('/') != std::string::npos) {
    throw Error(Errc::InvalidConfig, "name must be a non-empty path component");
  }
  if (auto m = kv.get("manifest")) c.manifest = resolve(base_dir, *m);
  if (auto d = kv.get("data")) {
    c.data = resolve(base_dir, *d);
  } else if (!c.manifest.empty()) {
    c.data = default_data_dir(c.manifest);
  }
  if (c.data.empty()) throw Error(Errc::InvalidConfig, "one of 'data' or 'manifest' is required");
  if (kv.has("seeds")) {
    c.seeds.clear();
    for (int s : kv.get_ints("seeds", {})) {
      if (s < 0) throw Error(Errc::InvalidConfig, "seeds must be non-negative");
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  c.output = resolve(base_dir, kv.get_string("output", c.output.string()));
  c.checkpoint_interval = kv.get_int("checkpoint_interval", c.checkpoint_interval);

  auto& t = c.train;
  t.algorithm = parse_algorithm(kv.get_string("algorithm", algorithm_name(t.algorithm)));
  t.iterations = kv.get_int("iterations", t.iterations);
  t.random_steps = kv.get_int("random_steps", t.random_steps);
  t.update_after = kv.get_int("update_after", t.update_after);

  t.irl.gamma = kv.get_double("irl.gamma", t.irl.gamma);
  t.irl.sigma_t = kv.get_double("irl.sigma_t", t.irl.sigma_t);
  t.irl.n_expert = non_negative(kv, "irl.n_expert", t.irl.n_expert);
  t.irl.n_buffer = non_negative(kv, "irl.n_buffer", t.irl.n_buffer);
  t.irl.i_rl = kv.get_int("irl.i_rl", t.irl.i_rl);
  t.irl.i_irl = kv.get_int("irl.i_irl", t.irl.i_irl);
  t.irl.segment_len = non_negative(kv, "irl.segment_len", t.irl.segment_len);
  t.irl.reward_hidden = kv.get_ints("irl.reward_hidden", t.irl.reward_hidden);
  t.irl.optimizer.lr = kv.get_double("irl.lr", t.irl.optimizer.lr);
  t.irl.optimizer.lr_decay = kv.get_double("irl.lr_decay", t.irl.optimizer.lr_decay);
  t.irl.optimizer.weight_decay = kv.get_double("irl.weight_decay", t.irl.optimizer.weight_decay);

  t.sac.actor_hidden = kv.get_ints("sac.actor_hidden", t.sac.actor_hidden);
  t.sac.critic_hidden = kv.get_ints("sac.critic_hidden", t.sac.critic_hidden);
  t.sac.optimizer.lr = kv.get_double("sac.lr", t.sac.optimizer.lr);
  t.sac.optimizer.lr_decay = kv.get_double("sac.lr_decay", t.sac.optimizer.lr_decay);
  t.sac.optimizer.weight_decay = kv.get_double("sac.weight_decay", t.sac.optimizer.weight_decay);
  t.sac.gamma = kv.get_double("sac.gamma", t.sac.gamma);
  t.sac.polyak = kv.get_double("sac.polyak", t.sac.polyak);
  t.sac.target_entropy = kv.get_double("sac.target_entropy", t.sac.target_entropy);
  t.sac.initial_log_alpha = kv.get_double("sac.initial_log_alpha", t.sac.initial_log_alpha);
  t.sac.batch_size = non_negative(kv, "sac.batch_size", t.sac.batch_size);
  t.sac.buffer_capacity = non_negative(kv, "sac.buffer_capacity", t.sac.buffer_capacity);

  t.episode.dt = kv.get_double("episode.dt", t.episode.dt);
  t.episode.goal_radius = kv.get_double("episode.goal_radius", t.episode.goal_radius);
  t.episode.max_steps = static_cast<int>(kv.get_int("episode.max_steps", t.episode.max_steps));
  t.episode.pedestrian_radius = kv.get_double("episode.pedestrian_radius", t.episode.pedestrian_radius);

  if (t.iterations < 0) throw Error(Errc::InvalidConfig, "iterations must be non-negative");
  if (c.checkpoint_interval < 0) throw Error(Errc::InvalidConfig, "checkpoint_interval must be non-negative");
  if (t.irl.i_rl < 1 || t.irl.i_irl < 1) throw Error(Errc::InvalidConfig, "irl.i_rl and irl.i_irl must be >= 1");
  if (t.sac.batch_size == 0 || t.sac.buffer_capacity == 0) {
    throw Error(Errc::InvalidConfig, "sac.batch_size and sac.buffer_capacity must be positive");
  }
  if (!(t.episode.dt > 0.0) || t.episode.max_steps < 1) {
    throw Error(Errc::InvalidConfig, "episode.dt and episode.max_steps must be positive");
  }
  for (const auto* h : {&t.irl.reward_hidden, &t.sac.actor_hidden, &t.sac.critic_hidden}) {
    for (int w : *h) {
      if (w < 1) throw Error(Errc::InvalidConfig, "hidden layer widths must be positive");
    }
  }
  return c;
}

RunConfig RunConfig::read(const std::filesystem::path& path) {
  return from_kv(KeyValues::read(path), path.parent_path());
}

KeyValues RunConfig::to_kv() const {
  KeyValues kv;
  const auto& t = train;
  kv.set("name", name);
  if (!manifest.empty()) kv.set("manifest", manifest.string());
  kv.set("data", data.string());
  kv.set("seeds", join(seeds));
  kv.set("output", output.string());
  kv.set("iterations", std::to_string(t.iterations));
  kv.set("checkpoint_interval", std::to_string(checkpoint_interval));
  kv.set("algorithm", algorithm_name(t.algorithm));
  kv.set("random_steps", std::to_string(t.random_steps));
  kv.set("update_after", std::to_string(t.update_after));

  kv.set("irl.gamma", format_double(t.irl.gamma));
  kv.set("irl.sigma_t", format_double(t.irl.sigma_t));
  kv.set("irl.n_expert", std::to_string(t.irl.n_expert));
  kv.set("irl.n_buffer", std::to_string(t.irl.n_buffer));
  kv.set("irl.i_rl", std::to_string(t.irl.i_rl));
  kv.set("irl.i_irl", std::to_string(t.irl.i_irl));
  kv.set("irl.segment_len", std::to_string(t.irl.segment_len));
  kv.set("irl.reward_hidden", join(t.irl.reward_hidden));
  kv.set("irl.lr", format_double(t.irl.optimizer.lr));
  kv.set("irl.lr_decay", format_double(t.irl.optimizer.lr_decay));
  kv.set("irl.weight_decay", format_double(t.irl.optimizer.weight_decay));

  kv.set("sac.actor_hidden", join(t.sac.actor_hidden));
  kv.set("sac.critic_hidden", join(t.sac.critic_hidden));
  kv.set("sac.lr", format_double(t.sac.optimizer.lr));
  kv.set("sac.lr_decay", format_double(t.sac.optimizer.lr_decay));
  kv.set("sac.weight_decay", format_double(t.sac.optimizer.weight_decay));
  kv.set("sac.gamma", format_double(t.sac.gamma));
  kv.set("sac.polyak", format_double(t.sac.polyak));
  kv.set("sac.target_entropy", format_double(t.sac.target_entropy));
  kv.set("sac.initial_log_alpha", format_double(t.sac.initial_log_alpha));
  kv.set("sac.batch_size", std::to_string(t.sac.batch_size));
  kv.set("sac.buffer_capacity", std::to_string(t.sac.buffer_capacity));

  kv.set("episode.dt", format_double(t.episode.dt));
  kv.set("episode.goal_radius", format_double(t.episode.goal_radius));
  kv.set("episode.max_steps", std::to_string(t.episode.max_steps));
  kv.set("episode.pedestrian_radius", format_double(t.episode.pedestrian_radius));
  return kv;
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  const auto kv = to_kv();
  for (const auto& [k, v] : kv.entries()) {
    auto* node = &j;
    std::string rest = k;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      node = &(*node)[rest.substr(0, dot)];
      rest = rest.substr(dot + 1);
    }
    (*node)[rest] = v;
  }
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  if (seeds.empty()) throw Error(Errc::InvalidConfig, "at least one seed is required");
  auto sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::InvalidConfig, "seeds must be distinct");
  }
  for (const char* f : {"scene.txt", "experts.txt"}) {
    if (!std::filesystem::exists(data / f)) {
      throw Error(Errc::InvalidConfig, "missing " + (data / f).string() + " (run preprocess first)");
    }
  }
}

}  // namespace replayirl::config
