#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "vecfin/data/market_frame.hpp"

namespace vecfin::data {

/// Binary frame file; layout documented in docs/FORMATS.md.
void save_frame(const std::filesystem::path& path, const MarketFrame& frame);
MarketFrame load_frame(const std::filesystem::path& path);

void write_frame(std::ostream& out, const MarketFrame& frame);
MarketFrame read_frame(std::istream& in);

/// Human-readable T/K/I/time-span summary.
std::string frame_summary(const MarketFrame& frame);

}  // namespace vecfin::data
