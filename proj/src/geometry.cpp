#include "gudg/geometry.hpp"

#include <cstdlib>

namespace gudg {

double Tolerances::env_scale_factor() {
    static const double factor = [] {
        const char* s = std::getenv("GEODESIC_UDG_EPS_SCALE");
        if (s == nullptr || *s == '\0') return 1.0;
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end == s || !std::isfinite(v) || v <= 0.0) return 1.0;
        return v;
    }();
    return factor;
}

bool segments_intersect(Point a, Point b, Point c, Point d) {
    const int d1 = orientation(c, d, a);
    const int d2 = orientation(c, d, b);
    const int d3 = orientation(a, b, c);
    const int d4 = orientation(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    const auto on = [](Point p, Point u, Point v) {
        return orientation(u, v, p) == 0 && std::min(u.x, v.x) <= p.x &&
               p.x <= std::max(u.x, v.x) && std::min(u.y, v.y) <= p.y &&
               p.y <= std::max(u.y, v.y);
    };
    return on(a, c, d) || on(b, c, d) || on(c, a, b) || on(d, a, b);
}

bool segments_properly_cross(Point a, Point b, Point c, Point d) {
    const int d1 = orientation(c, d, a);
    const int d2 = orientation(c, d, b);
    const int d3 = orientation(a, b, c);
    const int d4 = orientation(a, b, d);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

std::optional<double> segment_segment_param(Point a, Point b, Point c, Point d,
                                            double eps) {
    const Point r = b - a;
    const Point s = d - c;
    const double denom = cross(r, s);
    if (denom == 0.0) return std::nullopt;  // parallel or collinear
    const double t = cross(c - a, s) / denom;
    const double u = cross(c - a, r) / denom;
    const double rel_t = eps / std::max(norm(r), 1e-300);
    const double rel_u = eps / std::max(norm(s), 1e-300);
    if (t < -rel_t || t > 1.0 + rel_t) return std::nullopt;
    if (u < -rel_u || u > 1.0 + rel_u) return std::nullopt;
    return t;
}

std::optional<double> ray_segment_param(Point origin, Point dir, Point c, Point d,
                                        double t_min, double eps) {
    const Point s = d - c;
    const double denom = cross(dir, s);
    if (denom == 0.0) return std::nullopt;
    const double t = cross(c - origin, s) / denom;
    const double u = cross(c - origin, dir) / denom;
    const double rel_u = eps / std::max(norm(s), 1e-300);
    if (u < -rel_u || u > 1.0 + rel_u) return std::nullopt;
    if (t < t_min) return std::nullopt;
    return t;
}

}  // namespace gudg
