#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace replayirl {

enum class Errc {
  DegenerateCorrespondences,
  PointAtInfinity,
  EmptyScene,
  OutOfTrackRange,
  GenerationFailed,
  UnknownPedestrian,
  EpisodeFinished,
  ShapeMismatch,
  TapeMismatch,
  NonFiniteGradient,
  EmptyBuffer,
  UnlabeledReward,
  EmptyTrajectorySet,
  MissingAction,
  DimensionMismatch,
  EmptyEvalSet,
  CheckpointVersionMismatch,
  InvalidConfig,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

// All library failures surface as this exception; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace replayirl
