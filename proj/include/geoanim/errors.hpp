#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace geoanim {

/// Stable machine-readable error categories. The service maps these onto
/// ApiError codes and HTTP statuses.
enum class ErrorKind {
  invalid_geometry,
  empty_input,
  antimeridian,
  not_found,
  invariant,
  precondition,
  contract,
  network,
  parse,
  unsupported_geometry,
  provider,
  fixture_missing,
  schema_violation,
  missing_tool_call,
  breakdown_failed,
  compile_blocked,
  action_failed,
  validation,
  conflict,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  /// Retryable errors are transient transport failures.
  virtual bool retryable() const noexcept { return false; }

 private:
  ErrorKind kind_;
  nlohmann::json detail_;
};

#define GEOANIM_DEFINE_ERROR(Name, Kind)                                        \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& message,                                   \
                  nlohmann::json detail = nlohmann::json::object())             \
        : Error(ErrorKind::Kind, message, std::move(detail)) {}                 \
  };

GEOANIM_DEFINE_ERROR(InvalidGeometryError, invalid_geometry)
GEOANIM_DEFINE_ERROR(EmptyInputError, empty_input)
GEOANIM_DEFINE_ERROR(AntimeridianError, antimeridian)
GEOANIM_DEFINE_ERROR(NotFoundError, not_found)
GEOANIM_DEFINE_ERROR(InvariantError, invariant)
GEOANIM_DEFINE_ERROR(PreconditionError, precondition)
GEOANIM_DEFINE_ERROR(ContractViolation, contract)
GEOANIM_DEFINE_ERROR(ParseError, parse)
GEOANIM_DEFINE_ERROR(UnsupportedGeometryError, unsupported_geometry)
GEOANIM_DEFINE_ERROR(FixtureMissingError, fixture_missing)
GEOANIM_DEFINE_ERROR(SchemaViolationError, schema_violation)
GEOANIM_DEFINE_ERROR(MissingToolCallError, missing_tool_call)
GEOANIM_DEFINE_ERROR(BreakdownFailedError, breakdown_failed)
GEOANIM_DEFINE_ERROR(CompileBlockedError, compile_blocked)
GEOANIM_DEFINE_ERROR(ActionFailedError, action_failed)
GEOANIM_DEFINE_ERROR(ValidationError, validation)
GEOANIM_DEFINE_ERROR(ConflictError, conflict)
GEOANIM_DEFINE_ERROR(IoError, io)

#undef GEOANIM_DEFINE_ERROR

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : Error(ErrorKind::network, message, std::move(detail)) {}
  bool retryable() const noexcept override { return true; }
};

/// Non-2xx answer from an LLM provider. 429 and 5xx are retryable.
class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& message, double retry_after_seconds = 0.0,
                nlohmann::json detail = nlohmann::json::object())
      : Error(ErrorKind::provider, message, std::move(detail)),
        status_(status),
        retry_after_(retry_after_seconds) {}

  int status() const noexcept { return status_; }
  double retry_after_seconds() const noexcept { return retry_after_; }
  bool retryable() const noexcept override { return status_ == 429 || status_ >= 500; }

 private:
  int status_;
  double retry_after_;
};

}  // namespace geoanim
