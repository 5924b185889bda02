#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "replayirl/features.hpp"
#include "replayirl/rng.hpp"
#include "replayirl/serialize.hpp"

namespace replayirl::sac {

inline constexpr int kActionDim = 2;
using ActionVec = std::array<double, kActionDim>;

struct Transition {
  features::FeatureVector state{};
  ActionVec pre_squash{};  // Gaussian sample u
  ActionVec action{};      // tanh(u), in (-1, 1)
  double log_prob = 0.0;   // behavior log-density at storage time (diagnostic)
  features::FeatureVector next_state{};
  std::int64_t episode_id = 0;
  int step_index = 0;      // episode-relative t of `state`
  bool done = false;       // last transition of its episode
  bool truncated = false;  // episode ended by time limit, value still bootstraps
  std::optional<double> reward;

  bool bootstrap() const { return !done || truncated; }
  friend bool operator==(const Transition&, const Transition&) = default;
};

void save_transition(io::Writer& w, const Transition& t);
Transition load_transition(io::Reader& r);

using Segment = std::vector<Transition>;

// FIFO ring of transitions with an index from episode id to its live range.
// Transitions of one episode must be stored contiguously.
class ReplayBuffer {
 public:
  struct EpisodeRange {
    std::uint64_t first = 0;  // global sequence number of the oldest live transition
    std::uint64_t end = 0;    // one past the newest
    friend bool operator==(const EpisodeRange&, const EpisodeRange&) = default;
  };

  explicit ReplayBuffer(std::size_t capacity);

  void store(Transition t);

  std::size_t size() const { return slots_.size() < capacity_ ? slots_.size() : capacity_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size() == 0; }

  // i = 0 is the oldest live transition.
  const Transition& at(std::size_t i) const;
  Transition& at(std::size_t i);

  // Uniform with replacement.
  std::vector<Transition> sample_batch(std::size_t n, Rng& rng) const;
  // Each segment starts at a uniformly drawn transition and runs forward for at
  // most max_len steps without leaving its episode.
  std::vector<Segment> sample_segments(std::size_t count, std::size_t max_len, Rng& rng) const;
  Segment segment_from(std::size_t i, std::size_t max_len) const;

  const std::map<std::int64_t, EpisodeRange>& episodes() const { return episodes_; }

  void save(io::Writer& w) const;
  static ReplayBuffer load(io::Reader& r);

 private:
  const Transition& by_seq(std::uint64_t seq) const { return slots_[seq % capacity_]; }
  std::uint64_t oldest_seq() const { return total_ - size(); }

  std::size_t capacity_;
  std::vector<Transition> slots_;
  std::uint64_t total_ = 0;
  std::map<std::int64_t, EpisodeRange> episodes_;
};

}  // namespace replayirl::sac
