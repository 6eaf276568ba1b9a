#include "vecfin/data/windows.hpp"

#include <string>

#include "vecfin/common/error.hpp"

namespace vecfin::data {

WindowSchedule WindowSchedule::shifted(std::size_t offset) const {
    WindowSchedule out = *this;
    for (auto& w : out.windows) {
        for (Range* r : {&w.train, &w.val, &w.test}) {
            r->begin += offset;
            r->end += offset;
        }
    }
    return out;
}

std::size_t WindowSchedule::span_end() const {
    return windows.empty() ? 0 : windows.back().test.end;
}

WindowSchedule make_windows(std::size_t T, std::size_t train, std::size_t val, std::size_t test,
                            std::size_t stride) {
    if (stride < 1 || train < 1 || test < 1) {
        fail(ErrorCode::InvalidArgument, "train, test and stride must be >= 1");
    }
    const std::size_t span = train + val + test;
    if (T < span) {
        fail(ErrorCode::InsufficientData, "need at least " + std::to_string(span) +
                                              " rows for one window, have " + std::to_string(T));
    }
    WindowSchedule schedule;
    for (std::size_t start = 0; start + span <= T; start += stride) {
        Window w;
        w.train = {start, start + train};
        w.val = {w.train.end, w.train.end + val};
        w.test = {w.val.end, w.val.end + test};
        schedule.windows.push_back(w);
    }
    return schedule;
}

void validate_schedule(const WindowSchedule& schedule, std::size_t T) {
    if (schedule.windows.empty()) {
        fail(ErrorCode::InsufficientData, "schedule has no windows");
    }
    for (std::size_t i = 0; i < schedule.windows.size(); ++i) {
        const Window& w = schedule.windows[i];
        if (w.train.size() == 0 || w.test.size() == 0) {
            fail(ErrorCode::WindowTooShort, "window " + std::to_string(i) + " has an empty range");
        }
        if (w.train.begin > w.train.end || w.train.end > w.val.begin || w.val.end > w.test.begin ||
            w.val.begin > w.val.end || w.test.begin > w.test.end || w.test.end > T) {
            fail(ErrorCode::InvalidArgument,
                 "window " + std::to_string(i) + " ranges are out of order or outside the frame");
        }
        if (i > 0 && schedule.windows[i - 1].test.end != w.test.begin) {
            fail(ErrorCode::InvalidArgument, "test ranges of windows " + std::to_string(i - 1) +
                                                 " and " + std::to_string(i) + " do not tile");
        }
    }
}

}  // namespace vecfin::data
