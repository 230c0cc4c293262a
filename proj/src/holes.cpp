#include "gudg/holes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "gudg/errors.hpp"

namespace gudg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

HolesEngine::HolesEngine(PolygonWithHoles domain)
    : domain_(std::move(domain)), tol_(Tolerances::for_scale(domain_.outer.bounds().diagonal())) {
    const auto add_ring = [&](const SimplePolygon& ring) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n; ++i) {
            edges_.emplace_back(ring[i], ring[(i + 1) % n]);
        }
    };
    add_ring(domain_.outer);
    for (const auto& h : domain_.holes) add_ring(h);

    for (const auto& [a, b] : edges_) {
        (void)b;
        points_.push_back(a);
    }
    adj_.resize(points_.size());
    for (int id = 0; id < static_cast<int>(points_.size()); ++id) connect(id);
}

bool HolesEngine::contains(Point p) const {
    return domain_.contains(p, tol_.eps_in());
}

bool HolesEngine::segment_inside(Point p, Point q) const {
    if (!contains(p) || !contains(q)) return false;
    if (p == q) return true;
    // No boundary edge may properly cross pq. Grazing contacts (through a
    // vertex, along an edge) are resolved by testing the midpoint of every
    // gap between consecutive contact parameters.
    std::vector<double> ts{0.0, 1.0};
    for (const auto& [a, b] : edges_) {
        if (segments_properly_cross(p, q, a, b)) return false;
        if (const auto t = segment_segment_param(p, q, a, b, 1e-12)) ts.push_back(*t);
        // Collinear overlaps yield no single param; cover them via the
        // endpoints of the boundary edge projected onto pq.
        const Point d = q - p;
        const double len2 = norm2(d);
        for (const Point& e : {a, b}) {
            if (point_segment_distance(e, p, q) <= tol_.eps_eq()) {
                ts.push_back(std::clamp(dot(e - p, d) / len2, 0.0, 1.0));
            }
        }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (ts[i + 1] - ts[i] < 1e-12) continue;
        const double mid = 0.5 * (ts[i] + ts[i + 1]);
        if (!contains(p + mid * (q - p))) return false;
    }
    return true;
}

void HolesEngine::connect(int id) {
    const Point p = points_[static_cast<std::size_t>(id)];
    for (int j = 0; j < id; ++j) {
        const Point q = points_[static_cast<std::size_t>(j)];
        if (segment_inside(p, q)) {
            const double w = norm(q - p);
            adj_[static_cast<std::size_t>(id)].emplace_back(j, w);
            adj_[static_cast<std::size_t>(j)].emplace_back(id, w);
        }
    }
}

int HolesEngine::add_site(Point p) {
    require_finite(p, "site");
    if (!contains(p)) {
        throw OutsidePolygonError("site lies outside the domain");
    }
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    adj_.emplace_back();
    connect(id);
    return id;
}

HolesEngine::ShortestPaths HolesEngine::dijkstra(int source) const {
    ShortestPaths sp;
    sp.dist.assign(points_.size(), kInf);
    sp.parent.assign(points_.size(), -1);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    sp.dist[static_cast<std::size_t>(source)] = 0.0;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > sp.dist[static_cast<std::size_t>(u)]) continue;
        for (const auto& [v, w] : adj_[static_cast<std::size_t>(u)]) {
            if (d + w < sp.dist[static_cast<std::size_t>(v)]) {
                sp.dist[static_cast<std::size_t>(v)] = d + w;
                sp.parent[static_cast<std::size_t>(v)] = u;
                pq.emplace(d + w, v);
            }
        }
    }
    return sp;
}

HolesEngine::ShortestPaths HolesEngine::shortest_paths_from(int node) const {
    return dijkstra(node);
}

double HolesEngine::distance(Point p, Point q) const {
    return path(p, q).length;
}

GeodesicPath HolesEngine::path(Point p, Point q) const {
    if (!contains(p) || !contains(q)) {
        throw OutsidePolygonError("path endpoint lies outside the domain");
    }
    GeodesicPath out;
    if (p == q) {
        out.waypoints = {p};
        out.length = 0.0;
        return out;
    }
    if (segment_inside(p, q)) {
        out.waypoints = {p, q};
        out.length = norm(q - p);
        return out;
    }
    // Scratch copy keeps the engine logically const for ad-hoc pairs.
    HolesEngine scratch = *this;
    const int sp_id = scratch.add_site(p);
    const int sq_id = scratch.add_site(q);
    const ShortestPaths sp = scratch.dijkstra(sp_id);
    if (sp.dist[static_cast<std::size_t>(sq_id)] == kInf) {
        throw GeometryError("domain is disconnected between query points");
    }
    std::vector<Point> rev;
    for (int cur = sq_id; cur != -1; cur = sp.parent[static_cast<std::size_t>(cur)]) {
        rev.push_back(scratch.points_[static_cast<std::size_t>(cur)]);
    }
    out.waypoints.assign(rev.rbegin(), rev.rend());
    out.length = sp.dist[static_cast<std::size_t>(sq_id)];
    return out;
}

}  // namespace gudg
