#include "gudg/polygon.hpp"

#include "gudg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gudg {

namespace {

double ring_signed_area(const std::vector<Point>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point a = v[i];
        const Point b = v[(i + 1) % v.size()];
        s += cross(a, b);
    }
    return 0.5 * s;
}

/// Intersection test for two ring edges, exempting shared ring endpoints.
bool ring_edges_conflict(const std::vector<Point>& ring, std::size_t i,
                         std::size_t j) {
    const std::size_t m = ring.size();
    const Point a = ring[i], b = ring[(i + 1) % m];
    const Point c = ring[j], d = ring[(j + 1) % m];
    if ((i + 1) % m == j) {
        // Adjacent: allowed to share exactly the common endpoint b == c.
        // Any further contact (overlap / crossing) is a self-intersection.
        return segments_properly_cross(a, b, c, d) ||
               (orientation(a, b, d) == 0 && segments_intersect(a, b, c, d) &&
                point_segment_distance2(d, a, b) == 0.0) ||
               (orientation(c, d, a) == 0 && point_segment_distance2(a, c, d) == 0.0);
    }
    if ((j + 1) % m == i) return ring_edges_conflict(ring, j, i);
    return segments_intersect(a, b, c, d);
}

}  // namespace

bool ring_self_intersects_quadratic(const std::vector<Point>& ring) {
    const std::size_t m = ring.size();
    if (m < 3) return false;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (ring_edges_conflict(ring, i, j)) return true;
        }
    }
    return false;
}

bool ring_self_intersects(const std::vector<Point>& ring) {
    const std::size_t m = ring.size();
    if (m < 3) return false;
    // Sort edge indices by min x; only pairs whose x-ranges overlap can
    // intersect, so each edge is tested against a short active window.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    const auto min_x = [&](std::size_t i) {
        return std::min(ring[i].x, ring[(i + 1) % m].x);
    };
    const auto max_x = [&](std::size_t i) {
        return std::max(ring[i].x, ring[(i + 1) % m].x);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (min_x(a) != min_x(b)) return min_x(a) < min_x(b);
        return a < b;
    });
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t e = order[k];
        const double x_lo = min_x(e);
        std::size_t keep = 0;
        for (std::size_t idx : active) {
            if (max_x(idx) >= x_lo) active[keep++] = idx;
        }
        active.resize(keep);
        const double y_lo = std::min(ring[e].y, ring[(e + 1) % m].y);
        const double y_hi = std::max(ring[e].y, ring[(e + 1) % m].y);
        for (std::size_t idx : active) {
            const double oy_lo = std::min(ring[idx].y, ring[(idx + 1) % m].y);
            const double oy_hi = std::max(ring[idx].y, ring[(idx + 1) % m].y);
            if (oy_hi < y_lo || oy_lo > y_hi) continue;
            if (ring_edges_conflict(ring, std::min(e, idx), std::max(e, idx))) {
                return true;
            }
        }
        active.push_back(e);
    }
    return false;
}

SimplePolygon SimplePolygon::from_points(std::vector<Point> ring, const char* what,
                                         bool expect_ccw) {
    const std::string name = what;
    for (Point p : ring) require_finite(p, what);
    // Drop an explicit closing vertex if present.
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    // Drop exact consecutive duplicates.
    {
        std::vector<Point> out;
        out.reserve(ring.size());
        for (Point p : ring) {
            if (out.empty() || !(out.back() == p)) out.push_back(p);
        }
        while (out.size() >= 2 && out.front() == out.back()) out.pop_back();
        ring = std::move(out);
    }
    if (ring.size() < 3) {
        throw GeometryError(name + ": needs at least 3 distinct vertices");
    }
    // Remove middle vertices of collinear consecutive triples. The tolerance
    // is tiny and scale-aware: it only strips genuinely flat corners, which
    // carry no geometry but break funnel/triangulation assumptions.
    {
        const double diag = bbox_of(ring).diagonal();
        const double eps_area = 1e-13 * diag * diag;
        bool changed = true;
        while (changed) {
            changed = false;
            const std::size_t m = ring.size();
            std::vector<Point> out;
            out.reserve(m);
            for (std::size_t i = 0; i < m; ++i) {
                const Point prev = ring[(i + m - 1) % m];
                const Point cur = ring[i];
                const Point next = ring[(i + 1) % m];
                if (std::abs(cross(prev, cur, next)) <= eps_area) {
                    changed = true;
                    continue;  // drop flat corner
                }
                out.push_back(cur);
            }
            ring = std::move(out);
            if (ring.size() < 3) break;
        }
    }
    if (ring.size() < 3) {
        throw GeometryError(name + ": degenerate (collapses to a segment)");
    }
    const double area2 = ring_signed_area(ring);
    if (area2 == 0.0) {
        throw GeometryError(name + ": zero signed area");
    }
    const bool is_ccw = area2 > 0.0;
    if (is_ccw != expect_ccw) std::reverse(ring.begin(), ring.end());
    if (ring_self_intersects(ring)) {
        throw GeometryError(name + ": ring is self-intersecting");
    }
    SimplePolygon poly;
    poly.v_ = std::move(ring);
    poly.bbox_ = bbox_of(poly.v_);
    return poly;
}

double SimplePolygon::signed_area() const { return ring_signed_area(v_); }

double SimplePolygon::boundary_distance(Point p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v_.size(); ++i) {
        best = std::min(best,
                        point_segment_distance2(p, v_[i], v_[(i + 1) % v_.size()]));
    }
    return std::sqrt(best);
}

bool SimplePolygon::contains_strict(Point p) const {
    // Even-odd rule on a horizontal ray toward +x.
    bool inside = false;
    const std::size_t m = v_.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point a = v_[i];
        const Point b = v_[(i + 1) % m];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool SimplePolygon::contains(Point p, double eps) const {
    if (p.x < bbox_.min_x - eps || p.x > bbox_.max_x + eps ||
        p.y < bbox_.min_y - eps || p.y > bbox_.max_y + eps) {
        return false;
    }
    if (boundary_distance(p) <= eps) return true;
    return contains_strict(p);
}

std::size_t PolygonWithHoles::total_vertices() const {
    std::size_t m = outer.size();
    for (const auto& h : holes) m += h.size();
    return m;
}

bool PolygonWithHoles::contains(Point p, double eps) const {
    if (!outer.contains(p, eps)) return false;
    for (const auto& h : holes) {
        if (h.boundary_distance(p) <= eps) return true;  // on hole boundary: ok
        if (h.contains_strict(p)) return false;
    }
    return true;
}

PolygonWithHoles PolygonWithHoles::from_rings(
    std::vector<Point> outer_ring, std::vector<std::vector<Point>> hole_rings) {
    PolygonWithHoles d;
    d.outer = SimplePolygon::from_points(std::move(outer_ring), "polygon",
                                         /*expect_ccw=*/true);
    d.holes.reserve(hole_rings.size());
    for (std::size_t i = 0; i < hole_rings.size(); ++i) {
        const std::string what = "hole " + std::to_string(i);
        auto hole = SimplePolygon::from_points(std::move(hole_rings[i]), what.c_str(),
                                               /*expect_ccw=*/false);
        for (Point p : hole.vertices()) {
            if (!d.outer.contains_strict(p)) {
                throw GeometryError(what + ": not strictly inside polygon");
            }
        }
        for (const auto& other : d.holes) {
            for (std::size_t a = 0; a < hole.size(); ++a) {
                for (std::size_t b = 0; b < other.size(); ++b) {
                    if (segments_intersect(hole[a], hole[(a + 1) % hole.size()],
                                           other[b], other[(b + 1) % other.size()])) {
                        throw GeometryError(what + ": overlaps another hole");
                    }
                }
            }
            if (other.contains_strict(hole[0]) || hole.contains_strict(other[0])) {
                throw GeometryError(what + ": nested holes are not allowed");
            }
        }
        d.holes.push_back(std::move(hole));
    }
    return d;
}

}  // namespace gudg
