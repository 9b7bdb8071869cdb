#include "p2pdeploy/error.hpp"

namespace p2pdeploy {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidName: return "invalid-name";
    case ErrorCode::NoNodes: return "no-nodes";
    case ErrorCode::RoutingFailure: return "routing-failure";
    case ErrorCode::DuplicateNode: return "duplicate-node";
    case ErrorCode::BootstrapUnreachable: return "bootstrap-unreachable";
    case ErrorCode::NoSuchNode: return "no-such-node";
    case ErrorCode::PublishFailed: return "publish-failed";
    case ErrorCode::VersionConflict: return "version-conflict";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Unavailable: return "unavailable";
    case ErrorCode::LookupFailure: return "lookup-failure";
    case ErrorCode::NotOwner: return "not-owner";
    case ErrorCode::MalformedUri: return "malformed-uri";
    case ErrorCode::Unresolvable: return "unresolvable";
    case ErrorCode::UnknownBundle: return "unknown-bundle";
    case ErrorCode::IntegrityError: return "integrity-error";
    case ErrorCode::LifecycleError: return "lifecycle-error";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::LivelockSuspected: return "livelock-suspected";
    case ErrorCode::InvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

}  // namespace p2pdeploy
