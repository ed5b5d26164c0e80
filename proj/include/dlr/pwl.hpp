#ifndef DLR_PWL_HPP
#define DLR_PWL_HPP

#include <cstddef>
#include <vector>

#include "dlr/errors.hpp"

namespace dlr {

// Absolute tolerance shared by all curve operations. Values are MW, MWh and
// hours at desk scale, so a single absolute tolerance is adequate.
double tolerance();
void set_tolerance(double tol);

// One linear piece of a capacity curve, viewed as a virtual device: a block of
// `power_mw` that can be sustained for `duration_h`.
struct SlopeSegment {
    double power_mw = 0.0;
    double duration_h = 0.0;
};

// Convex, non-increasing piecewise-linear curve in (power, energy) space.
// Canonical form: vertices sorted by strictly increasing p starting at p = 0,
// collinear interior vertices merged, final energy exactly 0. The curve value
// is 0 for p beyond the last vertex.
class EpCurve {
public:
    struct Vertex {
        double p_mw = 0.0;
        double e_mwh = 0.0;
    };

    // Zero curve {(0,0)}.
    EpCurve();

    // Canonicalizes the given vertex list; throws Error(InvalidCurve) if the
    // points do not describe a convex non-increasing curve ending at zero.
    explicit EpCurve(std::vector<Vertex> vertices);

    static EpCurve from_segments(std::vector<SlopeSegment> segments);

    // Linear interpolation; 0 beyond p_max. Negative p is a domain error.
    double evaluate(double p_mw) const;

    // One segment per linear piece, ordered by decreasing duration.
    std::vector<SlopeSegment> segments() const;

    const std::vector<Vertex>& vertices() const { return vertices_; }
    std::size_t segment_count() const { return vertices_.size() - 1; }
    double p_max() const { return vertices_.back().p_mw; }
    double total_energy() const { return vertices_.front().e_mwh; }
    double initial_slope() const;
    bool is_zero() const { return vertices_.size() == 1; }

private:
    std::vector<Vertex> vertices_;
};

bool approx_equal(const EpCurve& a, const EpCurve& b, double tol);

// True iff b(p) <= a(p) + tol for all p. Checked on the union of both vertex
// p-sets, which is sufficient for piecewise-linear curves.
bool dominates(const EpCurve& a, const EpCurve& b);

// Capacity-curve addition: segment decompositions are concatenated and the
// curve rebuilt. Commutative and associative.
EpCurve minkowski_add(const EpCurve& a, const EpCurve& b);

// Smallest x* with sum_j power_j * min(duration_j, x*) = ed_mwh, taken over
// the curve's segment decomposition. Throws EnergyExceedsFleet if ed_mwh
// exceeds the curve's total energy.
double solve_truncation_time(const EpCurve& curve, double ed_mwh);

// Capacity curve of the fleet truncated to total energy ed_mwh: every segment
// duration is capped at x*(ed_mwh). Equals the convex-hull construction that
// adjoins the point (0, ed_mwh) to the region above the curve.
EpCurve convex_hull_truncate(const EpCurve& curve, double ed_mwh);

// Piecewise-linear non-decreasing curve through (0,0), used for loss and
// recovery-time functions parameterized by x*. Evaluation clamps to the last
// vertex value beyond the domain (both functions saturate there).
class MonotoneCurve {
public:
    struct Vertex {
        double x_h = 0.0;
        double value = 0.0;
    };

    // Single vertex {(0,0)}.
    MonotoneCurve();
    explicit MonotoneCurve(std::vector<Vertex> vertices);

    // Straight line from (0,0) to (x_end, v_end); {(0,0)} when x_end == 0.
    static MonotoneCurve ramp(double x_end, double v_end);

    double evaluate(double x_h) const;

    const std::vector<Vertex>& vertices() const { return vertices_; }
    std::size_t segment_count() const { return vertices_.size() - 1; }
    double x_max() const { return vertices_.back().x_h; }
    double final_value() const { return vertices_.back().value; }

private:
    std::vector<Vertex> vertices_;
};

bool approx_equal(const MonotoneCurve& a, const MonotoneCurve& b, double tol);

// Pointwise sum on the merged breakpoint grid. The result spans the larger of
// the two domains; the shorter curve contributes its saturated value beyond
// its own domain.
MonotoneCurve pointwise_sum(const MonotoneCurve& a, const MonotoneCurve& b);

// Pointwise max; intersection points of crossing segments become vertices.
MonotoneCurve pointwise_max(const MonotoneCurve& a, const MonotoneCurve& b);

} // namespace dlr

#endif
