#ifndef DLR_TRACE_HPP
#define DLR_TRACE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "dlr/pwl.hpp"

namespace dlr {

// Signed regulation request samples at uniform granularity; up-regulation
// positive, down-regulation negative.
struct RequestTrace {
    double dt_h = 1.0 / 60.0;
    std::vector<double> samples_mw;
    std::string origin; // timestamp of the first sample, informational

    void validate() const;
};

enum class Direction { up, down };

const char* direction_name(Direction direction);

struct WindowStats {
    std::size_t start_index = 0;
    std::size_t steps = 0;
    double window_h = 0.0;
    Direction direction = Direction::up;
    double max_power_mw = 0.0;
    double energy_mwh = 0.0;
    double effective_time_h = 0.0; // energy / max power, capped at window_h

    // Down-regulation carries a negative sign by convention.
    double signed_max_power_mw() const {
        return direction == Direction::up ? max_power_mw : -max_power_mw;
    }
};

// Consecutive non-overlapping windows from the trace start; keeps the samples
// of the requested sign and drops windows that are zero throughout. A partial
// trailing window is dropped. Throws AlignmentError when the window length is
// not an integer multiple of the sample granularity.
std::vector<WindowStats> split_windows(const RequestTrace& trace, double window_h,
                                       Direction direction);

// One-sided samples of a window, as used by split_windows.
std::vector<double> window_samples(const RequestTrace& trace, const WindowStats& stats);

// E-p transform of the window's one-sided signal with both axes rescaled by
// the window's maximum power, so the curve runs from (0, effective_time) to
// (1, 0). Throws EmptyWindow when the window has no positive sample.
EpCurve ep_of_window(const RequestTrace& trace, const WindowStats& stats);

// Pearson correlation between signed maximum power and effective time.
// Throws UndefinedStatistic for fewer than two windows or zero variance.
double correlation(const std::vector<WindowStats>& stats);

struct HistogramBin {
    double lo_h = 0.0;
    double hi_h = 0.0;
    std::size_t count = 0;
};

// Effective-time histogram with fixed-width bins starting at zero.
std::vector<HistogramBin> effective_time_histogram(const std::vector<WindowStats>& stats,
                                                   double bin_width_h);

} // namespace dlr

#endif
