#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oracleloom {

enum class ErrorCode {
  // domain
  NoKeyword,
  BadDate,
  AllZero,
  InvalidRequest,
  // sentiment
  EmptyLexicon,
  BadThresholds,
  DayMismatch,
  BadLexicon,
  // forecasting
  TooShort,
  SingularDesign,
  LengthMismatch,
  BadArgument,
  // record store
  InvalidRecord,
  StorageFailure,
  NonContiguous,
  // crawler
  FixtureMissing,
  BadFixture,
  LiveDisabled,
  UpstreamError,
  NotFound,
  // llm gateway
  ProviderUnknown,
  Timeout,
  BudgetExceeded,
  // prompts
  EmptyClause,
  MissingSection,
  MalformedMarkers,
  // reports
  NoData,
  IncompleteReport,
  // config
  BadConfig,
};

std::string_view to_string(ErrorCode code);

/// Typed failure carried through every layer. The HTTP facade and CLI map the
/// code to status / exit codes; `what()` is the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Upstream failures carry enough metadata for a caller to decide on retry.
class UpstreamFailure : public Error {
 public:
  UpstreamFailure(const std::string& message, int status, bool transient,
                  int retry_after_ms = 0)
      : Error(ErrorCode::UpstreamError, message),
        status_(status),
        transient_(transient),
        retry_after_ms_(retry_after_ms) {}

  int status() const noexcept { return status_; }
  bool transient() const noexcept { return transient_; }
  int retry_after_ms() const noexcept { return retry_after_ms_; }

 private:
  int status_;
  bool transient_;
  int retry_after_ms_;
};

/// A pipeline failure tagged with the thinking step that produced it.
class StepError : public Error {
 public:
  StepError(ErrorCode code, int step, const std::string& message)
      : Error(code, "step " + std::to_string(step) + ": " + message), step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace oracleloom
