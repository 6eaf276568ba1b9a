#pragma once

#include <cstddef>
#include <vector>

namespace vecfin::data {

/// Half-open index interval.
struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const Range&) const = default;
};

struct Window {
    Range train;
    Range val;
    Range test;
    bool operator==(const Window&) const = default;
};

struct WindowSchedule {
    std::vector<Window> windows;

    /// Same schedule with every range moved `offset` rows later.
    WindowSchedule shifted(std::size_t offset) const;
    /// End of the last test range (0 when empty).
    std::size_t span_end() const;
};

WindowSchedule make_windows(std::size_t T, std::size_t train = 30, std::size_t val = 5,
                            std::size_t test = 5, std::size_t stride = 5);

/// Throws unless train < val < test within each window and the test ranges
/// are contiguous across windows.
void validate_schedule(const WindowSchedule& schedule, std::size_t T);

}  // namespace vecfin::data
