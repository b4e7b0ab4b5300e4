#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lampp {

enum class Errc {
  // prior-core
  DegenerateScore,
  IncompleteGrid,
  DegenerateRow,
  EmptyEnvironment,
  BadLambda,
  EmptyVocab,
  // lm-bridge
  RenderError,
  ScoringUnavailable,
  ProtocolViolation,
  // seg-relabel
  UnknownLabel,
  OracleTooLarge,
  SegmentMismatch,
  // nav-sim
  Exhausted,
  NoEpisodes,
  // action-hmm
  DegeneratePosterior,
  PriorTooWeak,
  EmptySequence,
  VideoMismatch,
  NothingToHoldOut,
  // cli-harness
  ReportMismatch,
  InvalidInput,
  InvariantViolation,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }
  // Message without the "Code: " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace lampp
