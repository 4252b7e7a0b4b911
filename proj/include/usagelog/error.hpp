#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace usagelog {

enum class ErrorCode {
  InvalidEntity,
  XmlMalformed,
  MissingIdentifierAttribute,
  BadTimestamp,
  DuplicateEventId,
  StorageFailure,
  BadCursor,
  BadResumptionToken,
  TransportError,
  ProtocolError,
  ParseError,
  EmptyQuery,
  UnbalancedEncoding,
  MalformedLine,
  InvalidConfig,
  TooFewRequesters,
  EmptyKey,
  EmptyGraph,
  InvalidArgument,
  EmptyIntersection,
  FileUnreadable,
  BadNumber,
  NotFound,
  AmbiguousQuery,
  NotInGraph,
  ArtifactsMissing,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure the library reports. The code is stable
/// and machine-readable; what() carries the human-readable location/context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace usagelog
