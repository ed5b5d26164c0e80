#include "dlr/trace.hpp"

#include <algorithm>
#include <cmath>

#include "dlr/fleet.hpp"

namespace dlr {

void RequestTrace::validate() const {
    if (!(dt_h > 0.0)) raise(ErrorCode::InvalidArgument, "sample granularity must be positive");
    for (double s : samples_mw)
        if (!std::isfinite(s)) raise(ErrorCode::InvalidArgument, "trace samples must be finite");
}

const char* direction_name(Direction direction) {
    return direction == Direction::up ? "up" : "down";
}

namespace {

double one_sided(double sample, Direction direction) {
    return direction == Direction::up ? std::max(sample, 0.0) : std::max(-sample, 0.0);
}

} // namespace

std::vector<WindowStats> split_windows(const RequestTrace& trace, double window_h,
                                       Direction direction) {
    trace.validate();
    if (!(window_h > 0.0)) raise(ErrorCode::InvalidArgument, "window length must be positive");
    const double ratio = window_h / trace.dt_h;
    const auto steps = static_cast<std::size_t>(std::llround(ratio));
    if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9)
        raise(ErrorCode::AlignmentError, "window is not an integer multiple of the granularity");

    std::vector<WindowStats> out;
    const std::size_t windows = trace.samples_mw.size() / steps;
    out.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t start = w * steps;
        double max_power = 0.0;
        double sum = 0.0;
        for (std::size_t i = start; i < start + steps; ++i) {
            const double v = one_sided(trace.samples_mw[i], direction);
            max_power = std::max(max_power, v);
            sum += v;
        }
        if (max_power <= 0.0) continue; // zero throughout: not a request
        WindowStats stats;
        stats.start_index = start;
        stats.steps = steps;
        stats.window_h = window_h;
        stats.direction = direction;
        stats.max_power_mw = max_power;
        stats.energy_mwh = trace.dt_h * sum;
        stats.effective_time_h = stats.energy_mwh / max_power;
        out.push_back(stats);
    }
    return out;
}

std::vector<double> window_samples(const RequestTrace& trace, const WindowStats& stats) {
    if (stats.start_index + stats.steps > trace.samples_mw.size())
        raise(ErrorCode::InvalidArgument, "window lies outside the trace");
    std::vector<double> out;
    out.reserve(stats.steps);
    for (std::size_t i = stats.start_index; i < stats.start_index + stats.steps; ++i)
        out.push_back(one_sided(trace.samples_mw[i], stats.direction));
    return out;
}

EpCurve ep_of_window(const RequestTrace& trace, const WindowStats& stats) {
    const std::vector<double> samples = window_samples(trace, stats);
    const double max_power = *std::max_element(samples.begin(), samples.end());
    if (max_power <= 0.0) raise(ErrorCode::EmptyWindow, "window has no request to transform");

    const EpCurve raw = ep_transform(StaircaseSignal{trace.dt_h, samples});
    std::vector<EpCurve::Vertex> pts;
    pts.reserve(raw.vertices().size());
    for (const EpCurve::Vertex& v : raw.vertices())
        pts.push_back({v.p_mw / max_power, v.e_mwh / max_power});
    return EpCurve(std::move(pts));
}

double correlation(const std::vector<WindowStats>& stats) {
    if (stats.size() < 2)
        raise(ErrorCode::UndefinedStatistic, "correlation needs at least two windows");
    const double n = static_cast<double>(stats.size());
    double mean_p = 0.0, mean_t = 0.0;
    for (const WindowStats& s : stats) {
        mean_p += s.signed_max_power_mw();
        mean_t += s.effective_time_h;
    }
    mean_p /= n;
    mean_t /= n;
    double cov = 0.0, var_p = 0.0, var_t = 0.0;
    for (const WindowStats& s : stats) {
        const double dp = s.signed_max_power_mw() - mean_p;
        const double dt = s.effective_time_h - mean_t;
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
    }
    if (var_p <= 0.0 || var_t <= 0.0)
        raise(ErrorCode::UndefinedStatistic, "correlation undefined for zero variance");
    return cov / std::sqrt(var_p * var_t);
}

std::vector<HistogramBin> effective_time_histogram(const std::vector<WindowStats>& stats,
                                                   double bin_width_h) {
    if (!(bin_width_h > 0.0)) raise(ErrorCode::InvalidArgument, "bin width must be positive");
    std::vector<HistogramBin> bins;
    for (const WindowStats& s : stats) {
        auto idx = static_cast<std::size_t>(s.effective_time_h / bin_width_h);
        if (idx >= bins.size()) {
            const std::size_t old = bins.size();
            bins.resize(idx + 1);
            for (std::size_t i = old; i < bins.size(); ++i) {
                bins[i].lo_h = static_cast<double>(i) * bin_width_h;
                bins[i].hi_h = static_cast<double>(i + 1) * bin_width_h;
            }
        }
        ++bins[idx].count;
    }
    return bins;
}

} // namespace dlr
