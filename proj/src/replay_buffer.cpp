#include "replayirl/replay_buffer.hpp"

#include <algorithm>

#include "replayirl/error.hpp"

namespace replayirl::sac {

void save_transition(io::Writer& w, const Transition& t) {
  w.put(t.state);
  w.put(t.pre_squash);
  w.put(t.action);
  w.put(t.log_prob);
  w.put(t.next_state);
  w.put(t.episode_id);
  w.put<std::int32_t>(t.step_index);
  w.put<std::uint8_t>(t.done);
  w.put<std::uint8_t>(t.truncated);
  w.put<std::uint8_t>(t.reward.has_value());
  w.put(t.reward.value_or(0.0));
}

Transition load_transition(io::Reader& r) {
  Transition t;
  t.state = r.get<features::FeatureVector>();
  t.pre_squash = r.get<ActionVec>();
  t.action = r.get<ActionVec>();
  t.log_prob = r.get<double>();
  t.next_state = r.get<features::FeatureVector>();
  t.episode_id = r.get<std::int64_t>();
  t.step_index = r.get<std::int32_t>();
  t.done = r.get<std::uint8_t>() != 0;
  t.truncated = r.get<std::uint8_t>() != 0;
  const bool has_reward = r.get<std::uint8_t>() != 0;
  const double reward = r.get<double>();
  if (has_reward) t.reward = reward;
  return t;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(Errc::InvalidConfig, "replay buffer capacity must be positive");
}

void ReplayBuffer::store(Transition t) {
  if (size() == capacity_) {
    const Transition& evicted = by_seq(oldest_seq());
    auto it = episodes_.find(evicted.episode_id);
    if (++it->second.first == it->second.end) episodes_.erase(it);
  }
  const std::uint64_t seq = total_;
  auto [it, inserted] = episodes_.try_emplace(t.episode_id, EpisodeRange{seq, seq});
  if (!inserted && it->second.end != seq) {
    throw Error(Errc::InvalidConfig, "episode " + std::to_string(t.episode_id) + " stored non-contiguously");
  }
  it->second.end = seq + 1;
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
  } else {
    slots_[seq % capacity_] = std::move(t);
  }
  ++total_;
}

const Transition& ReplayBuffer::at(std::size_t i) const { return by_seq(oldest_seq() + i); }

Transition& ReplayBuffer::at(std::size_t i) { return slots_[(oldest_seq() + i) % capacity_]; }

std::vector<Transition> ReplayBuffer::sample_batch(std::size_t n, Rng& rng) const {
  if (empty()) throw Error(Errc::EmptyBuffer, "sample_batch on empty buffer");
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(at(rng.index(size())));
  return out;
}

Segment ReplayBuffer::segment_from(std::size_t i, std::size_t max_len) const {
  const std::uint64_t start = oldest_seq() + i;
  const auto& range = episodes_.at(by_seq(start).episode_id);
  const std::uint64_t stop = std::min<std::uint64_t>(start + max_len, range.end);
  Segment seg;
  seg.reserve(static_cast<std::size_t>(stop - start));
  for (std::uint64_t s = start; s < stop; ++s) seg.push_back(by_seq(s));
  return seg;
}

std::vector<Segment> ReplayBuffer::sample_segments(std::size_t count, std::size_t max_len, Rng& rng) const {
  if (empty()) throw Error(Errc::EmptyBuffer, "sample_segments on empty buffer");
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(segment_from(rng.index(size()), max_len));
  return out;
}

void ReplayBuffer::save(io::Writer& w) const {
  w.put<std::uint64_t>(capacity_);
  w.put<std::uint64_t>(total_);
  w.put<std::uint64_t>(size());
  for (std::size_t i = 0; i < size(); ++i) save_transition(w, at(i));
}

ReplayBuffer ReplayBuffer::load(io::Reader& r) {
  ReplayBuffer b(static_cast<std::size_t>(r.get<std::uint64_t>()));
  const auto total = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  if (n > b.capacity_ || n > total) throw Error(Errc::Io, "corrupt replay buffer header");
  // Replaying the live window through store() rebuilds the episode index;
  // sequence numbers are then shifted so slot positions match the original.
  b.total_ = total - n;
  b.slots_.resize(static_cast<std::size_t>(std::min<std::uint64_t>(b.capacity_, total)));
  std::size_t stored = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    Transition t = load_transition(r);
    const std::uint64_t seq = b.total_;
    auto [it, inserted] = b.episodes_.try_emplace(t.episode_id, EpisodeRange{seq, seq});
    it->second.end = seq + 1;
    b.slots_[seq % b.capacity_] = std::move(t);
    ++b.total_;
    ++stored;
  }
  if (b.slots_.size() < b.capacity_) b.slots_.resize(stored);
  return b;
}

}  // namespace replayirl::sac
