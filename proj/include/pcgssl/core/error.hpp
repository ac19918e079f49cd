#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcgssl {

/// Failure categories raised across the library. Each maps to one documented
/// error condition of an operation, so callers can branch on the category
/// instead of parsing messages.
enum class Errc {
  MalformedHeader,
  UnknownLocationCode,
  MissingMandatoryAnnotation,
  ContradictoryLabels,
  UnsupportedEncoding,
  TruncatedFile,
  StratumTooSmall,
  UnsupportedRate,
  InvalidCutoff,
  InvalidArgument,
  ShapeMismatch,
  NonFiniteGradient,
  StepOutOfRange,
  DegenerateEmbedding,
  EmptyDataset,
  MissingLabel,
  UnfrozenBackbone,
  NoWindows,
  EmptyMatrix,
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnknownLocationCode: return "UnknownLocationCode";
    case Errc::MissingMandatoryAnnotation: return "MissingMandatoryAnnotation";
    case Errc::ContradictoryLabels: return "ContradictoryLabels";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::StratumTooSmall: return "StratumTooSmall";
    case Errc::UnsupportedRate: return "UnsupportedRate";
    case Errc::InvalidCutoff: return "InvalidCutoff";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::StepOutOfRange: return "StepOutOfRange";
    case Errc::DegenerateEmbedding: return "DegenerateEmbedding";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::MissingLabel: return "MissingLabel";
    case Errc::UnfrozenBackbone: return "UnfrozenBackbone";
    case Errc::NoWindows: return "NoWindows";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace pcgssl
