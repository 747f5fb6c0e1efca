#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace tbill {

/// Failure categories shared by every module.
enum class ErrorKind {
  InvalidArgument,
  NonPositiveArc,
  NonMaximalLastArc,
  TauOutOfRange,
  CornerHit,
  HitDiscontinuity,
  ConditionC1Violated,
  DegenerateStep,
  MeanDegenerate,
  ReduciblePermutation,
  NotALoop,
  NotPrimitive,
  SpectralHypothesisFailed,
  HInE3,
};

const char* to_string(ErrorKind kind);

/// Exception carrying an ErrorKind and, for orbit/trajectory failures, the
/// step at which it happened.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::int64_t> step = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), step_(step) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::int64_t> step() const noexcept { return step_; }

  /// True for failures that mean "the theorem's hypotheses do not hold here"
  /// rather than misuse of the API.
  bool is_hypothesis_failure() const noexcept {
    return kind_ == ErrorKind::MeanDegenerate || kind_ == ErrorKind::SpectralHypothesisFailed ||
           kind_ == ErrorKind::HInE3;
  }

 private:
  ErrorKind kind_;
  std::optional<std::int64_t> step_;
};

}  // namespace tbill
