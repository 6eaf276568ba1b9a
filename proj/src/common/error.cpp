#include "vecfin/common/error.hpp"

namespace vecfin {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::MissingAsset: return "MissingAsset";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonPositivePath: return "NonPositivePath";
    case ErrorCode::EpisodeFinished: return "EpisodeFinished";
    case ErrorCode::NonFiniteAction: return "NonFiniteAction";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::StalePolicy: return "StalePolicy";
    case ErrorCode::MixedActionSpaces: return "MixedActionSpaces";
    case ErrorCode::EmptyValidationWindow: return "EmptyValidationWindow";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Unsupported: return "Unsupported";
    }
    return "Unknown";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRow:
    case ErrorCode::NonPositivePrice:
    case ErrorCode::EmptyIntersection:
    case ErrorCode::MissingAsset:
    case ErrorCode::InsufficientHistory:
    case ErrorCode::InsufficientData:
    case ErrorCode::NonPositivePath:
    case ErrorCode::EmptyValidationWindow:
    case ErrorCode::WindowTooShort:
    case ErrorCode::IoError:
        return 2;
    case ErrorCode::NonFiniteAction:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::NonFiniteLoss:
        return 3;
    default:
        return 1;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace vecfin
