#include "dlr/pwl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

namespace dlr {

namespace {

std::atomic<double> g_tolerance{1e-9};

// Vertical deviation of the middle point from the chord through its
// neighbours. Positive means the middle point lies above the chord.
double chord_deviation(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double t = (x1 - x0) / (x2 - x0);
    return y1 - (y0 + t * (y2 - y0));
}

} // namespace

double tolerance() { return g_tolerance.load(std::memory_order_relaxed); }

void set_tolerance(double tol) {
    if (!(tol > 0.0)) raise(ErrorCode::InvalidArgument, "tolerance must be positive");
    g_tolerance.store(tol, std::memory_order_relaxed);
}

EpCurve::EpCurve() : vertices_{{0.0, 0.0}} {}

EpCurve::EpCurve(std::vector<Vertex> vertices) {
    const double tol = tolerance();
    if (vertices.empty()) {
        vertices_ = {{0.0, 0.0}};
        return;
    }
    std::sort(vertices.begin(), vertices.end(),
              [](const Vertex& a, const Vertex& b) { return a.p_mw < b.p_mw; });

    // Merge vertices with coincident p, keeping the first.
    std::vector<Vertex> pts;
    pts.reserve(vertices.size());
    for (const Vertex& v : vertices) {
        if (!pts.empty() && v.p_mw - pts.back().p_mw <= tol) {
            if (std::abs(v.e_mwh - pts.back().e_mwh) > tol)
                raise(ErrorCode::InvalidCurve, "coincident powers with distinct energies");
            continue;
        }
        pts.push_back(v);
    }

    if (std::abs(pts.front().p_mw) > tol)
        raise(ErrorCode::InvalidCurve, "curve must start at p = 0");
    pts.front().p_mw = 0.0;

    for (Vertex& v : pts) {
        if (v.p_mw < 0.0 || v.e_mwh < -tol)
            raise(ErrorCode::InvalidCurve, "negative power or energy");
        v.e_mwh = std::max(v.e_mwh, 0.0);
    }

    // Non-increasing energy, with tiny upticks flattened.
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].e_mwh > pts[i - 1].e_mwh + tol)
            raise(ErrorCode::InvalidCurve, "energy must be non-increasing in power");
        pts[i].e_mwh = std::min(pts[i].e_mwh, pts[i - 1].e_mwh);
    }

    // Drop everything after the first (near-)zero energy vertex.
    std::size_t last = pts.size() - 1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].e_mwh <= tol) {
            last = i;
            break;
        }
    }
    pts.resize(last + 1);
    if (pts.back().e_mwh > tol)
        raise(ErrorCode::InvalidCurve, "curve must reach zero energy");
    pts.back().e_mwh = 0.0;
    if (pts.size() == 1) {
        vertices_ = {{0.0, 0.0}};
        return;
    }

    // Convexity pass: a vertex above the chord of its neighbours breaks
    // convexity; a vertex within tolerance of the chord is merged away.
    std::vector<Vertex> out;
    out.reserve(pts.size());
    for (const Vertex& v : pts) {
        while (out.size() >= 2) {
            const Vertex& a = out[out.size() - 2];
            const Vertex& b = out.back();
            const double dev = chord_deviation(a.p_mw, a.e_mwh, b.p_mw, b.e_mwh, v.p_mw, v.e_mwh);
            if (dev > tol) raise(ErrorCode::InvalidCurve, "curve is not convex");
            if (dev >= -tol) {
                out.pop_back();
                continue;
            }
            break;
        }
        out.push_back(v);
    }
    vertices_ = std::move(out);
}

EpCurve EpCurve::from_segments(std::vector<SlopeSegment> segments) {
    for (const SlopeSegment& s : segments) {
        if (!(s.power_mw > 0.0)) raise(ErrorCode::InvalidCurve, "segment power must be positive");
        if (s.duration_h < 0.0) raise(ErrorCode::InvalidCurve, "segment duration must be non-negative");
    }
    std::erase_if(segments, [](const SlopeSegment& s) { return s.duration_h <= 0.0; });
    std::stable_sort(segments.begin(), segments.end(),
                     [](const SlopeSegment& a, const SlopeSegment& b) {
                         return a.duration_h > b.duration_h;
                     });

    double energy = 0.0;
    for (const SlopeSegment& s : segments) energy += s.power_mw * s.duration_h;

    std::vector<Vertex> pts;
    pts.reserve(segments.size() + 1);
    double p = 0.0;
    double e = energy;
    pts.push_back({p, e});
    for (const SlopeSegment& s : segments) {
        p += s.power_mw;
        e -= s.power_mw * s.duration_h;
        pts.push_back({p, e});
    }
    pts.back().e_mwh = 0.0;
    return EpCurve(std::move(pts));
}

double EpCurve::evaluate(double p_mw) const {
    if (p_mw < 0.0) raise(ErrorCode::InvalidArgument, "power must be non-negative");
    if (p_mw >= p_max()) return 0.0;
    auto it = std::upper_bound(vertices_.begin(), vertices_.end(), p_mw,
                               [](double p, const Vertex& v) { return p < v.p_mw; });
    const Vertex& hi = *it;
    const Vertex& lo = *(it - 1);
    const double t = (p_mw - lo.p_mw) / (hi.p_mw - lo.p_mw);
    return lo.e_mwh + t * (hi.e_mwh - lo.e_mwh);
}

std::vector<SlopeSegment> EpCurve::segments() const {
    std::vector<SlopeSegment> out;
    out.reserve(vertices_.size() - 1);
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
        const double width = vertices_[i + 1].p_mw - vertices_[i].p_mw;
        const double drop = vertices_[i].e_mwh - vertices_[i + 1].e_mwh;
        out.push_back({width, drop / width});
    }
    return out;
}

double EpCurve::initial_slope() const {
    if (vertices_.size() < 2) return 0.0;
    return (vertices_[1].e_mwh - vertices_[0].e_mwh) / (vertices_[1].p_mw - vertices_[0].p_mw);
}

bool approx_equal(const EpCurve& a, const EpCurve& b, double tol) {
    if (a.vertices().size() != b.vertices().size()) return false;
    for (std::size_t i = 0; i < a.vertices().size(); ++i) {
        if (std::abs(a.vertices()[i].p_mw - b.vertices()[i].p_mw) > tol) return false;
        if (std::abs(a.vertices()[i].e_mwh - b.vertices()[i].e_mwh) > tol) return false;
    }
    return true;
}

bool dominates(const EpCurve& a, const EpCurve& b) {
    const double tol = tolerance();
    for (const EpCurve::Vertex& v : b.vertices())
        if (v.e_mwh > a.evaluate(v.p_mw) + tol) return false;
    for (const EpCurve::Vertex& v : a.vertices())
        if (b.evaluate(v.p_mw) > v.e_mwh + tol) return false;
    return true;
}

EpCurve minkowski_add(const EpCurve& a, const EpCurve& b) {
    std::vector<SlopeSegment> merged = a.segments();
    const std::vector<SlopeSegment> rhs = b.segments();
    merged.insert(merged.end(), rhs.begin(), rhs.end());
    return EpCurve::from_segments(std::move(merged));
}

double solve_truncation_time(const EpCurve& curve, double ed_mwh) {
    const double tol = tolerance();
    if (ed_mwh < -tol) raise(ErrorCode::InvalidArgument, "reserved energy must be non-negative");
    const double total = curve.total_energy();
    if (ed_mwh > total + tol)
        raise(ErrorCode::EnergyExceedsFleet, "reserved energy exceeds curve total energy");
    ed_mwh = std::clamp(ed_mwh, 0.0, total);
    if (ed_mwh <= 0.0) return 0.0;

    // Ascending durations; Ed(x*) is linear between consecutive durations.
    std::vector<SlopeSegment> segs = curve.segments();
    std::sort(segs.begin(), segs.end(), [](const SlopeSegment& a, const SlopeSegment& b) {
        return a.duration_h < b.duration_h;
    });
    double saturated = 0.0; // energy of segments already shorter than x*
    double active = 0.0;    // total power of segments still growing with x*
    for (const SlopeSegment& s : segs) active += s.power_mw;
    double x_prev = 0.0;
    for (const SlopeSegment& s : segs) {
        const double at_next = saturated + active * s.duration_h;
        if (ed_mwh <= at_next) return x_prev + (ed_mwh - (saturated + active * x_prev)) / active;
        saturated += s.power_mw * s.duration_h;
        active -= s.power_mw;
        x_prev = s.duration_h;
    }
    return x_prev; // ed_mwh == total: smallest solution is the longest duration
}

EpCurve convex_hull_truncate(const EpCurve& curve, double ed_mwh) {
    const double x_star = solve_truncation_time(curve, ed_mwh);
    std::vector<SlopeSegment> segs = curve.segments();
    for (SlopeSegment& s : segs) s.duration_h = std::min(s.duration_h, x_star);
    return EpCurve::from_segments(std::move(segs));
}

MonotoneCurve::MonotoneCurve() : vertices_{{0.0, 0.0}} {}

MonotoneCurve::MonotoneCurve(std::vector<Vertex> vertices) {
    const double tol = tolerance();
    if (vertices.empty()) {
        vertices_ = {{0.0, 0.0}};
        return;
    }
    std::sort(vertices.begin(), vertices.end(),
              [](const Vertex& a, const Vertex& b) { return a.x_h < b.x_h; });

    std::vector<Vertex> pts;
    pts.reserve(vertices.size());
    for (const Vertex& v : vertices) {
        if (!pts.empty() && v.x_h - pts.back().x_h <= tol) {
            if (std::abs(v.value - pts.back().value) > tol)
                raise(ErrorCode::InvalidCurve, "coincident abscissae with distinct values");
            continue;
        }
        pts.push_back(v);
    }

    if (std::abs(pts.front().x_h) > tol || std::abs(pts.front().value) > tol)
        raise(ErrorCode::InvalidCurve, "curve must pass through (0, 0)");
    pts.front() = {0.0, 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].value < pts[i - 1].value - tol)
            raise(ErrorCode::InvalidCurve, "curve must be non-decreasing");
        pts[i].value = std::max(pts[i].value, pts[i - 1].value);
    }

    // Merge collinear interior vertices.
    std::vector<Vertex> out;
    out.reserve(pts.size());
    for (const Vertex& v : pts) {
        while (out.size() >= 2) {
            const Vertex& a = out[out.size() - 2];
            const Vertex& b = out.back();
            if (std::abs(chord_deviation(a.x_h, a.value, b.x_h, b.value, v.x_h, v.value)) <= tol) {
                out.pop_back();
                continue;
            }
            break;
        }
        out.push_back(v);
    }
    vertices_ = std::move(out);
}

MonotoneCurve MonotoneCurve::ramp(double x_end, double v_end) {
    if (x_end <= tolerance()) return MonotoneCurve();
    return MonotoneCurve({{0.0, 0.0}, {x_end, v_end}});
}

double MonotoneCurve::evaluate(double x_h) const {
    if (x_h < 0.0) raise(ErrorCode::InvalidArgument, "abscissa must be non-negative");
    if (x_h >= x_max()) return vertices_.back().value;
    auto it = std::upper_bound(vertices_.begin(), vertices_.end(), x_h,
                               [](double x, const Vertex& v) { return x < v.x_h; });
    const Vertex& hi = *it;
    const Vertex& lo = *(it - 1);
    const double t = (x_h - lo.x_h) / (hi.x_h - lo.x_h);
    return lo.value + t * (hi.value - lo.value);
}

bool approx_equal(const MonotoneCurve& a, const MonotoneCurve& b, double tol) {
    if (a.vertices().size() != b.vertices().size()) return false;
    for (std::size_t i = 0; i < a.vertices().size(); ++i) {
        if (std::abs(a.vertices()[i].x_h - b.vertices()[i].x_h) > tol) return false;
        if (std::abs(a.vertices()[i].value - b.vertices()[i].value) > tol) return false;
    }
    return true;
}

namespace {

std::vector<double> merged_grid(const MonotoneCurve& a, const MonotoneCurve& b) {
    std::vector<double> xs;
    xs.reserve(a.vertices().size() + b.vertices().size());
    for (const MonotoneCurve::Vertex& v : a.vertices()) xs.push_back(v.x_h);
    for (const MonotoneCurve::Vertex& v : b.vertices()) xs.push_back(v.x_h);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

} // namespace

MonotoneCurve pointwise_sum(const MonotoneCurve& a, const MonotoneCurve& b) {
    std::vector<MonotoneCurve::Vertex> pts;
    for (double x : merged_grid(a, b)) pts.push_back({x, a.evaluate(x) + b.evaluate(x)});
    return MonotoneCurve(std::move(pts));
}

MonotoneCurve pointwise_max(const MonotoneCurve& a, const MonotoneCurve& b) {
    const std::vector<double> xs = merged_grid(a, b);
    std::vector<MonotoneCurve::Vertex> pts;
    pts.reserve(2 * xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        pts.push_back({xs[i], std::max(a.evaluate(xs[i]), b.evaluate(xs[i]))});
        if (i + 1 == xs.size()) break;
        // Insert the crossing point when the leader changes inside the cell.
        const double d0 = a.evaluate(xs[i]) - b.evaluate(xs[i]);
        const double d1 = a.evaluate(xs[i + 1]) - b.evaluate(xs[i + 1]);
        if ((d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0)) {
            const double t = d0 / (d0 - d1);
            const double xc = xs[i] + t * (xs[i + 1] - xs[i]);
            pts.push_back({xc, std::max(a.evaluate(xc), b.evaluate(xc))});
        }
    }
    return MonotoneCurve(std::move(pts));
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidCurve: return "InvalidCurve";
        case ErrorCode::InvalidDevice: return "InvalidDevice";
        case ErrorCode::EnergyExceedsFleet: return "EnergyExceedsFleet";
        case ErrorCode::NotDischargeSignal: return "NotDischargeSignal";
        case ErrorCode::NotRoundTripSignal: return "NotRoundTripSignal";
        case ErrorCode::InfeasibleStep: return "InfeasibleStep";
        case ErrorCode::InfeasibleSignal: return "InfeasibleSignal";
        case ErrorCode::ReservationViolated: return "ReservationViolated";
        case ErrorCode::AlignmentError: return "AlignmentError";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::UndefinedStatistic: return "UndefinedStatistic";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::FormatMismatch: return "FormatMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

} // namespace dlr
