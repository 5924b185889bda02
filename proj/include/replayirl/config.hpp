#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "replayirl/irl.hpp"

namespace replayirl::config {

// Flat `key = value` text with optional `[section]` headers; keys are stored
// as "section.key". `#` starts a comment.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValues read(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const;

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Throws InvalidConfig naming the first key outside `known`.
  void reject_unknown(const std::set<std::string>& known) const;

  std::string dump() const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;

  std::string origin_;
  std::map<std::string, std::string> entries_;
  std::map<std::string, int> lines_;
};

std::string algorithm_name(irl::Algorithm a);
irl::Algorithm parse_algorithm(const std::string& s);

struct RunConfig {
  std::string name = "run";
  std::filesystem::path manifest;  // scene manifest, for provenance and as the default data location
  std::filesystem::path data;      // preprocessed directory with scene.txt and experts.txt
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output = "out";
  std::int64_t checkpoint_interval = 0;  // 0: final checkpoint only
  irl::TrainConfig train;

  // Relative paths resolve against base_dir.
  static RunConfig from_kv(const KeyValues& kv, const std::filesystem::path& base_dir = {});
  static RunConfig read(const std::filesystem::path& path);
  KeyValues to_kv() const;
  std::string to_json() const;

  // Referenced paths exist and seeds are distinct.
  void validate() const;
  std::filesystem::path seed_dir(std::uint64_t seed) const { return output / name / std::to_string(seed); }
};

// Directory preprocess writes to when no explicit output is given.
std::filesystem::path default_data_dir(const std::filesystem::path& manifest);

}  // namespace replayirl::config
