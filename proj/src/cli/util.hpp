#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "vecfin/common/error.hpp"

namespace vecfin::cli {

inline void ensure_parent(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
}

}  // namespace vecfin::cli
