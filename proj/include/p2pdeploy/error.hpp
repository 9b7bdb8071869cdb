#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace p2pdeploy {

enum class ErrorCode {
  InvalidName,
  NoNodes,
  RoutingFailure,
  DuplicateNode,
  BootstrapUnreachable,
  NoSuchNode,
  PublishFailed,
  VersionConflict,
  NotFound,
  Unavailable,
  LookupFailure,
  NotOwner,
  MalformedUri,
  Unresolvable,
  UnknownBundle,
  IntegrityError,
  LifecycleError,
  ParseError,
  LivelockSuspected,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so callers
// (and the CLI) can branch on the outcome without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace p2pdeploy
