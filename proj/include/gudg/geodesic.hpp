/**
 * Geodesic query engine for a triangulated simple polygon.
 *
 * Distance/path queries run the sleeve-and-funnel algorithm: locate the two
 * endpoint triangles, walk the unique dual-tree corridor between them, and
 * pull the path taut through the portal sequence (string pulling with apex
 * restarts). Every query is O(m) and exact up to floating point; interior
 * waypoints of returned paths are polygon vertices.
 *
 * The engine also exposes funnels to segment bases and, built on them,
 * per-source distance tables along a segment: a segment is partitioned into
 * intervals each claimed by one funnel vertex (its anchor), on which the
 * geodesic distance is anchor_distance + Euclidean distance to the anchor.
 * These tables give closed-form evaluation, minimization, and level-crossing
 * along diagonals, which the envelope and Voronoi modules build on.
 */
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gudg/polygon.hpp"
#include "gudg/triangulation.hpp"

namespace gudg {

struct Segment {
    Point a;
    Point b;
};

struct GeodesicPath {
    std::vector<Point> waypoints;  // first = s, last = t, interior = polygon vertices
    double length = 0.0;
};

struct Funnel {
    Point cusp;                  // junction vertex of the two side paths
    std::vector<Point> side_a;   // cusp -> base.a (inclusive both ends)
    std::vector<Point> side_b;   // cusp -> base.b
    Segment base;
    double cusp_distance = 0.0;  // geodesic distance from the funnel source to cusp
};

class GeodesicEngine {
public:
    explicit GeodesicEngine(SimplePolygon polygon);

    const SimplePolygon& polygon() const { return polygon_; }
    const Triangulation& triangulation() const { return tri_; }
    const Tolerances& tol() const { return tol_; }

    /// Triangle containing p (smallest id on ties); OutsidePolygonError if
    /// p is farther than eps_in outside every triangle.
    int locate_triangle(Point p) const;

    bool contains(Point p) const;

    double geodesic_distance(Point p, Point q) const;
    GeodesicPath shortest_path(Point p, Point q) const;

    /// Waypoints adjacent to p and to q on pi(p,q). DegenerateQueryError if p == q.
    std::pair<Point, Point> anchors(Point p, Point q) const;

    /// Farthest point from s common to pi(s,t) and pi(s,r).
    Point junction_vertex(Point s, Point t, Point r) const;

    Funnel build_funnel(Point s, Segment base) const;

private:
    GeodesicPath sleeve_path(Point p, Point q) const;

    SimplePolygon polygon_;
    Triangulation tri_;
    Tolerances tol_;
};

/**
 * Geodesic distance from a fixed source to every point of a segment [A, B],
 * as a sequence of anchor cells. t parameterizes A + t*(B-A), t in [0,1].
 */
class DiagonalDistanceTable {
public:
    struct Cell {
        double t_lo;
        double t_hi;
        Point apex;        // anchor claiming this interval
        double base_dist;  // geodesic distance source -> apex
    };

    DiagonalDistanceTable() = default;
    DiagonalDistanceTable(const GeodesicEngine& engine, Point a, Point b, Point source);

    Point point_at(double t) const { return a_ + t * (b_ - a_); }
    double eval(double t) const;

    /// Parameter of the distance minimum over [0,1]. Within each cell the
    /// minimizer is the perpendicular foot of the anchor on the segment
    /// (the funnel-tangent construction), clamped to the cell.
    double min_t() const { return min_t_; }
    double min_distance() const { return min_dist_; }

    /// Smallest t >= t0 with eval(t) == target while scanning upward
    /// (resp. largest t <= t0 downward). nullopt if no crossing.
    std::optional<double> solve_up(double t0, double target) const;
    std::optional<double> solve_down(double t0, double target) const;

    const Cell& cell_at(double t) const;
    const std::vector<Cell>& cells() const { return cells_; }
    Point a() const { return a_; }
    Point b() const { return b_; }

private:
    Point a_, b_;
    std::vector<Cell> cells_;
    double min_t_ = 0.0;
    double min_dist_ = 0.0;
};

}  // namespace gudg
