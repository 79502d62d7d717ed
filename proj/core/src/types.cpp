#include "pslp/types.hpp"

#include <utility>

namespace pslp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kDimensionError: return "DimensionError";
    case ErrorCode::kBadNeighborCount: return "BadNeighborCount";
    case ErrorCode::kBadAlpha: return "BadAlpha";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kInsufficientClasses: return "InsufficientClasses";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kIndivisibleQueryCount: return "IndivisibleQueryCount";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message)
    : code_(code), message_(std::move(message)) {
  rebuild_what();
}

Error Error::with_seed(std::uint64_t seed) const {
  Error annotated = *this;
  annotated.seed_ = seed;
  annotated.rebuild_what();
  return annotated;
}

void Error::rebuild_what() {
  what_ = std::string(to_string(code_)) + ": " + message_;
  if (seed_) what_ += " (episode seed " + std::to_string(*seed_) + ")";
}

}  // namespace pslp
