#include "lampp/error.hpp"

namespace lampp {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::DegenerateScore: return "DegenerateScore";
    case Errc::IncompleteGrid: return "IncompleteGrid";
    case Errc::DegenerateRow: return "DegenerateRow";
    case Errc::EmptyEnvironment: return "EmptyEnvironment";
    case Errc::BadLambda: return "BadLambda";
    case Errc::EmptyVocab: return "EmptyVocab";
    case Errc::RenderError: return "RenderError";
    case Errc::ScoringUnavailable: return "ScoringUnavailable";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::OracleTooLarge: return "OracleTooLarge";
    case Errc::SegmentMismatch: return "SegmentMismatch";
    case Errc::Exhausted: return "Exhausted";
    case Errc::NoEpisodes: return "NoEpisodes";
    case Errc::DegeneratePosterior: return "DegeneratePosterior";
    case Errc::PriorTooWeak: return "PriorTooWeak";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::VideoMismatch: return "VideoMismatch";
    case Errc::NothingToHoldOut: return "NothingToHoldOut";
    case Errc::ReportMismatch: return "ReportMismatch";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

}  // namespace lampp
