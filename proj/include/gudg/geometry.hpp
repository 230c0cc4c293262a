/**
 * Basic planar geometry: points, orientation predicates, segment and ray
 * intersections, bounding boxes, and the library-wide tolerance surface.
 *
 * Conventions used throughout the library:
 *  - all coordinates are finite doubles (validated at the API boundary);
 *  - orientation follows the usual sign of the 2x2 cross product, so
 *    cross(a,b,c) > 0 means c lies strictly left of the directed line a->b;
 *  - every epsilon is derived from a single instance-wide scale (the
 *    bounding-box diagonal of the input polygon) so that tolerances are
 *    dimensionally consistent across modules.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

#include "gudg/errors.hpp"
#include <string>
#include <vector>

namespace gudg {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double k, Point a) { return {k * a.x, k * a.y}; }
    friend Point operator*(Point a, double k) { return {k * a.x, k * a.y}; }
    friend Point operator/(Point a, double k) { return {a.x / k, a.y / k}; }
    friend bool operator==(Point a, Point b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(Point a, Point b) { return !(a == b); }
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
/// Signed area of the (a,b,c) triangle times two; > 0 iff c is left of a->b.
inline double cross(Point a, Point b, Point c) { return cross(b - a, c - a); }
inline double norm2(Point a) { return dot(a, a); }
inline double norm(Point a) { return std::sqrt(norm2(a)); }
inline double distance(Point a, Point b) { return norm(b - a); }
inline Point normalized(Point a) {
    const double n = norm(a);
    return n > 0.0 ? a / n : Point{0.0, 0.0};
}
/// Counterclockwise perpendicular.
inline Point perp(Point a) { return {-a.y, a.x}; }

inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Three-way orientation with an absolute tolerance on the doubled area.
inline int orientation(Point a, Point b, Point c, double eps = 0.0) {
    const double s = cross(a, b, c);
    if (s > eps) return +1;
    if (s < -eps) return -1;
    return 0;
}

struct BBox {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    void expand(Point p) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    bool empty() const { return min_x > max_x; }
    double diagonal() const {
        if (empty()) return 0.0;
        return std::hypot(max_x - min_x, max_y - min_y);
    }
};

inline BBox bbox_of(const std::vector<Point>& pts) {
    BBox b;
    for (Point p : pts) b.expand(p);
    return b;
}

/**
 * Library-wide tolerance surface. All epsilons are multiples of a geometric
 * scale (the bounding-box diagonal of the governing polygon). The scale can
 * be adjusted globally through the GEODESIC_UDG_EPS_SCALE environment
 * variable (a multiplicative factor, default 1), which is read once.
 */
struct Tolerances {
    double scale = 1.0;

    /// Containment slack for point-in-polygon and point-on-diagonal tests.
    double eps_in() const { return 1e-9 * scale; }
    /// Coordinate/distance equality band.
    double eps_eq() const { return 1e-9 * scale; }
    /// Bisection target for root finding along monotone quantities.
    double eps_root() const { return 1e-10 * scale; }
    /// Sampling resolution used by test-only envelope/curve oracles.
    double envelope_resolution() const { return 1e-4 * scale; }
    /// Deterministic perturbation unit for general-position enforcement.
    double eps_perturb() const { return 1e-9 * scale; }

    static double env_scale_factor();
    static Tolerances for_scale(double raw_scale) {
        Tolerances t;
        t.scale = std::max(raw_scale, 1e-30) * env_scale_factor();
        return t;
    }
};

/// Squared distance from p to segment [a,b].
inline double point_segment_distance2(Point p, Point a, Point b) {
    const Point ab = b - a;
    const double len2 = norm2(ab);
    if (len2 == 0.0) return norm2(p - a);
    double t = dot(p - a, ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return norm2(p - (a + t * ab));
}
inline double point_segment_distance(Point p, Point a, Point b) {
    return std::sqrt(point_segment_distance2(p, a, b));
}

/// Exact test: do closed segments [a,b] and [c,d] share at least one point?
bool segments_intersect(Point a, Point b, Point c, Point d);

/// Proper crossing test: interiors intersect in exactly one point.
bool segments_properly_cross(Point a, Point b, Point c, Point d);

/**
 * Intersection parameter of segment [a,b] with segment [c,d], if the
 * supporting lines cross within both segments (closed, with slack eps on the
 * parameter range). Returns the parameter along [a,b].
 */
std::optional<double> segment_segment_param(Point a, Point b, Point c, Point d,
                                            double eps = 0.0);

/**
 * First intersection of the ray origin + t*dir (t >= t_min) with segment
 * [c,d]; returns t, or nullopt if the ray misses the segment.
 */
std::optional<double> ray_segment_param(Point origin, Point dir, Point c, Point d,
                                        double t_min = 0.0, double eps = 0.0);

/// Throwing validator used at API boundaries to keep NaN/Inf out.
inline void require_finite(Point p, const char* what) {
    if (!is_finite(p)) {
        throw GeometryError(std::string(what) +
                                    ": coordinates must be finite");
    }
}

}  // namespace gudg
