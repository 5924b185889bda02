#include "replayirl/error.hpp"

namespace replayirl {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DegenerateCorrespondences: return "DegenerateCorrespondences";
    case Errc::PointAtInfinity: return "PointAtInfinity";
    case Errc::EmptyScene: return "EmptyScene";
    case Errc::OutOfTrackRange: return "OutOfTrackRange";
    case Errc::GenerationFailed: return "GenerationFailed";
    case Errc::UnknownPedestrian: return "UnknownPedestrian";
    case Errc::EpisodeFinished: return "EpisodeFinished";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TapeMismatch: return "TapeMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::EmptyBuffer: return "EmptyBuffer";
    case Errc::UnlabeledReward: return "UnlabeledReward";
    case Errc::EmptyTrajectorySet: return "EmptyTrajectorySet";
    case Errc::MissingAction: return "MissingAction";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyEvalSet: return "EmptyEvalSet";
    case Errc::CheckpointVersionMismatch: return "CheckpointVersionMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace replayirl
