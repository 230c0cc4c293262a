/**
 * Simple polygons and polygons with holes: construction-time validation and
 * normalization, containment queries, and self-intersection detection.
 *
 * Normalization performed by SimplePolygon::from_points:
 *  - drops a repeated closing vertex and exact consecutive duplicates;
 *  - removes middle vertices of (near-)collinear consecutive triples;
 *  - reorients to counterclockwise (by signed area).
 * After normalization the ring must still have >= 3 vertices and must be
 * simple (non-adjacent edges disjoint, adjacent edges sharing only their
 * common endpoint); violations raise std::invalid_argument with context.
 */
#pragma once

#include <cstddef>
#include <vector>

#include "gudg/geometry.hpp"

namespace gudg {

class SimplePolygon {
public:
    SimplePolygon() = default;

    /**
     * Validate + normalize a vertex ring. `what` names the input in error
     * messages (e.g. "polygon", "hole 2"). `expect_ccw` is the stored
     * orientation; input in either orientation is accepted and reoriented.
     */
    static SimplePolygon from_points(std::vector<Point> ring, const char* what,
                                     bool expect_ccw = true);

    std::size_t size() const { return v_.size(); }
    const std::vector<Point>& vertices() const { return v_; }
    Point vertex(std::size_t i) const { return v_[i % v_.size()]; }
    Point operator[](std::size_t i) const { return v_[i]; }

    double signed_area() const;
    double area() const { return std::abs(signed_area()); }
    const BBox& bounds() const { return bbox_; }

    /// Shortest distance from p to the boundary ring.
    double boundary_distance(Point p) const;

    /// Even-odd containment; points within eps of the boundary count inside.
    bool contains(Point p, double eps) const;

    /// Strict even-odd containment (no boundary slack).
    bool contains_strict(Point p) const;

private:
    std::vector<Point> v_;
    BBox bbox_;
};

struct PolygonWithHoles {
    SimplePolygon outer;                 // stored counterclockwise
    std::vector<SimplePolygon> holes;    // stored clockwise

    std::size_t total_vertices() const;
    /// Inside outer (with slack) and outside every hole (with slack).
    bool contains(Point p, double eps) const;

    static PolygonWithHoles from_rings(std::vector<Point> outer_ring,
                                       std::vector<std::vector<Point>> hole_rings);
};

/**
 * Self-intersection detection over a vertex ring (before normalization).
 * The production detector sorts edges by x-extent and tests only pairs with
 * overlapping x-ranges; the quadratic scan tests every pair. Both use the
 * same exact segment predicate and must agree on every input.
 */
bool ring_self_intersects(const std::vector<Point>& ring);
bool ring_self_intersects_quadratic(const std::vector<Point>& ring);

}  // namespace gudg
