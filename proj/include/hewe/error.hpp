#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hewe {

enum class ErrorCode {
  EmptyData,
  NonPositiveValue,
  ParseError,
  RemovalExhaustsSample,
  RankOutOfRange,
  InsufficientData,
  DomainError,
  DegenerateVariance,
  BiasDirectionDegenerate,
  EstimationFailed,
  InvalidArgument,
  NotFound,
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RemovalExhaustsSample: return "RemovalExhaustsSample";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::BiasDirectionDegenerate: return "BiasDirectionDegenerate";
    case ErrorCode::EstimationFailed: return "EstimationFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code so the
/// CLI and the HTTP service can map it to exit statuses and error payloads.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] std::string_view name() const noexcept { return code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hewe
