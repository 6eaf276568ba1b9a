#pragma once

#include <optional>
#include <sstream>
#include <string>

#include "vecfin/common/error.hpp"

template <class F>
std::optional<vecfin::ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const vecfin::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

template <class F>
std::string error_message_of(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

#define CHECK_ERROR_CODE(expr, expected) \
    CHECK(error_code_of([&] { (void)(expr); }) == std::optional<vecfin::ErrorCode>(expected))
