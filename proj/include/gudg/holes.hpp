/**
 * Shortest paths in a polygonal domain (outer boundary plus holes) via an
 * explicit visibility graph over the domain vertices with Dijkstra on top.
 *
 * Runs in O(V^2 E) to build and O(V^2) per query, which is the point: it is
 * simple enough to trust, serves as the reference oracle for the geodesic
 * engine on hole-free inputs, and is the baseline engine for domains with
 * holes. Query points can be added lazily; added sites become permanent
 * graph nodes so batches of sources amortize their visibility scans.
 */
#pragma once

#include <vector>

#include "gudg/geodesic.hpp"
#include "gudg/polygon.hpp"

namespace gudg {

class HolesEngine {
public:
    struct ShortestPaths {
        std::vector<double> dist;    // by node id; +inf if unreachable
        std::vector<int> parent;     // by node id; -1 at the source
    };

    explicit HolesEngine(PolygonWithHoles domain);

    const PolygonWithHoles& domain() const { return domain_; }
    const Tolerances& tol() const { return tol_; }

    int node_count() const { return static_cast<int>(points_.size()); }
    Point node_point(int id) const { return points_[static_cast<std::size_t>(id)]; }

    /// Permanently add a point as a graph node; returns its node id.
    /// Throws OutsidePolygonError if p is outside the domain.
    int add_site(Point p);

    ShortestPaths shortest_paths_from(int node) const;

    double distance(Point p, Point q) const;
    GeodesicPath path(Point p, Point q) const;

    bool contains(Point p) const;
    /// True iff the closed segment pq lies inside the domain.
    bool segment_inside(Point p, Point q) const;

private:
    void connect(int id);  // visibility edges from node id to all earlier nodes
    ShortestPaths dijkstra(int source) const;

    PolygonWithHoles domain_;
    Tolerances tol_;
    std::vector<std::pair<Point, Point>> edges_;  // all boundary edges
    std::vector<Point> points_;                   // domain vertices + added sites
    std::vector<std::vector<std::pair<int, double>>> adj_;
};

}  // namespace gudg
