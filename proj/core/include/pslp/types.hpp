#pragma once

#include <cstdint>
#include <optional>
#include <exception>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pslp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Episode-local class index in 0..N.
using ClassIndex = int;
using LabelVector = std::vector<ClassIndex>;

enum class ErrorCode {
  kMalformedHeader,
  kDimensionMismatch,
  kParseError,
  kEmptyBank,
  kDimensionError,
  kBadNeighborCount,
  kBadAlpha,
  kSingularSystem,
  kNoConvergence,
  kLabelOutOfRange,
  kEmptyClass,
  kInsufficientClasses,
  kInsufficientSamples,
  kIndivisibleQueryCount,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Library error. Carries the seed of the episode that failed when one is known.
class Error : public std::exception {
 public:
  Error(ErrorCode code, std::string message);

  const char* what() const noexcept override { return what_.c_str(); }
  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }

  /// Copy of this error annotated with an episode seed.
  Error with_seed(std::uint64_t seed) const;

 private:
  void rebuild_what();

  ErrorCode code_;
  std::string message_;
  std::optional<std::uint64_t> seed_;
  std::string what_;
};

}  // namespace pslp
