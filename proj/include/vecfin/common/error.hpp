#pragma once

#include <stdexcept>
#include <string>

namespace vecfin {

enum class ErrorCode {
    // data
    MalformedRow,
    NonPositivePrice,
    EmptyIntersection,
    MissingAsset,
    InsufficientHistory,
    InsufficientData,
    NonPositivePath,
    // env
    EpisodeFinished,
    NonFiniteAction,
    IndexOutOfRange,
    // nn / agents
    ShapeMismatch,
    NonFiniteGradient,
    NonFiniteLoss,
    StalePolicy,
    MixedActionSpaces,
    // ensemble / backtest
    EmptyValidationWindow,
    WindowTooShort,
    // plumbing
    InvalidArgument,
    ConfigError,
    IoError,
    Unsupported,
};

const char* to_string(ErrorCode code);

/// Process exit code contract: 1 config, 2 data, 3 numeric.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace vecfin
