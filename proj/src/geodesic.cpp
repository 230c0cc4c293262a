#include "gudg/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gudg/errors.hpp"

namespace gudg {

namespace {

bool lex_less(Point a, Point b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
}

double polyline_length(const std::vector<Point>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) s += distance(w[i], w[i + 1]);
    return s;
}

std::string point_str(Point p) {
    return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

}  // namespace

GeodesicEngine::GeodesicEngine(SimplePolygon polygon)
    : polygon_(std::move(polygon)),
      tri_(triangulate(polygon_)),
      tol_(Tolerances::for_scale(polygon_.bounds().diagonal())) {}

int GeodesicEngine::locate_triangle(Point p) const {
    require_finite(p, "query point");
    const auto& v = polygon_.vertices();
    const double eps = tol_.eps_in();
    int best = -1;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < static_cast<int>(tri_.tris.size()); ++t) {
        const auto& tr = tri_.tris[t];
        double margin = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            const Point a = v[tr.v[k]];
            const Point b = v[tr.v[(k + 1) % 3]];
            const double len = distance(a, b);
            margin = std::min(margin, len > 0.0 ? cross(a, b, p) / len
                                                : -std::numeric_limits<double>::infinity());
        }
        if (margin >= -eps) return t;  // first hit = smallest triangle id on ties
        if (margin > best_margin) {
            best_margin = margin;
            best = t;
        }
    }
    // Numerical grace band for points that round just outside every triangle
    // while still being inside the polygon within tolerance.
    if (best >= 0 && best_margin >= -16.0 * eps) return best;
    throw OutsidePolygonError("point " + point_str(p) + " lies outside the polygon");
}

bool GeodesicEngine::contains(Point p) const {
    return polygon_.contains(p, tol_.eps_in());
}

GeodesicPath GeodesicEngine::sleeve_path(Point p, Point q) const {
    GeodesicPath path;
    if (p == q) {
        const int t = locate_triangle(p);
        (void)t;
        path.waypoints = {p};
        path.length = 0.0;
        return path;
    }
    const int tp = locate_triangle(p);
    const int tq = locate_triangle(q);
    const auto& v = polygon_.vertices();
    if (tp == tq) {
        path.waypoints = {p, q};
        path.length = distance(p, q);
        return path;
    }

    // Unique corridor between the triangles in the dual tree.
    const int n_tris = static_cast<int>(tri_.tris.size());
    std::vector<int> parent(static_cast<std::size_t>(n_tris), -2);
    std::vector<int> fifo{tp};
    parent[tp] = -1;
    for (std::size_t h = 0; h < fifo.size() && parent[tq] == -2; ++h) {
        for (int nb : tri_.tris[fifo[h]].nbr) {
            if (nb >= 0 && parent[nb] == -2) {
                parent[nb] = fifo[h];
                fifo.push_back(nb);
            }
        }
    }
    std::vector<int> corridor;
    for (int cur = tq; cur != -1; cur = parent[cur]) corridor.push_back(cur);
    std::reverse(corridor.begin(), corridor.end());

    // Portals oriented (left, right) as seen walking p -> q. Crossing the
    // CCW-directed edge (v[k] -> v[k+1]) of the source triangle leaves its
    // left side, so the travel-left endpoint is v[k+1].
    std::vector<Point> lefts{p}, rights{p};
    lefts.reserve(corridor.size() + 2);
    rights.reserve(corridor.size() + 2);
    for (std::size_t i = 0; i + 1 < corridor.size(); ++i) {
        const auto& tr = tri_.tris[corridor[i]];
        int k = 0;
        while (tr.nbr[k] != corridor[i + 1]) ++k;
        lefts.push_back(v[tr.v[(k + 1) % 3]]);
        rights.push_back(v[tr.v[k]]);
    }
    lefts.push_back(q);
    rights.push_back(q);

    // String pulling with apex restarts.
    auto& out = path.waypoints;
    out.push_back(p);
    Point apex = p, pl = p, pr = p;
    std::size_t ai = 0, li = 0, ri = 0;
    for (std::size_t i = 1; i < lefts.size(); ++i) {
        const Point l = lefts[i];
        const Point r = rights[i];
        // Rays are half-lines: a candidate collinear with a funnel edge but
        // behind the apex has NOT crossed over. The collinear band needs a
        // relative tolerance (points generated on a portal line carry
        // ~1e-16 cross-product noise).
        const auto inside_of = [&](Point bound, Point cand, double want_sign) {
            const double s = cross(apex, bound, cand);
            if (std::abs(s) <= 1e-12 * norm(bound - apex) * norm(cand - apex)) {
                return dot(bound - apex, cand - apex) <= 0.0;
            }
            return s * want_sign > 0.0;
        };
        if (cross(apex, pr, r) >= 0.0) {  // r not right of the right ray: tightens
            if (apex == pr || inside_of(pl, r, -1.0)) {
                pr = r;
                ri = i;
            } else {  // right sweeps over left: left point becomes the apex
                if (!(out.back() == pl)) out.push_back(pl);
                apex = pl;
                ai = li;
                pl = pr = apex;
                li = ri = ai;
                i = ai;  // rescan portals after the new apex
                continue;
            }
        }
        if (cross(apex, pl, l) <= 0.0) {  // l not left of the left ray: tightens
            if (apex == pl || inside_of(pr, l, 1.0)) {
                pl = l;
                li = i;
            } else {
                if (!(out.back() == pr)) out.push_back(pr);
                apex = pr;
                ai = ri;
                pl = pr = apex;
                li = ri = ai;
                i = ai;
                continue;
            }
        }
    }
    if (!(out.back() == q)) out.push_back(q);
    path.length = polyline_length(out);
    return path;
}

GeodesicPath GeodesicEngine::shortest_path(Point p, Point q) const {
    require_finite(p, "path endpoint");
    require_finite(q, "path endpoint");
    // Canonical query order makes d(p,q) and d(q,p) bit-identical.
    if (lex_less(q, p)) {
        GeodesicPath path = sleeve_path(q, p);
        std::reverse(path.waypoints.begin(), path.waypoints.end());
        return path;
    }
    return sleeve_path(p, q);
}

double GeodesicEngine::geodesic_distance(Point p, Point q) const {
    return shortest_path(p, q).length;
}

std::pair<Point, Point> GeodesicEngine::anchors(Point p, Point q) const {
    if (p == q) {
        throw DegenerateQueryError("anchors: endpoints coincide at " + point_str(p));
    }
    const GeodesicPath path = shortest_path(p, q);
    const auto& w = path.waypoints;
    return {w[1], w[w.size() - 2]};
}

namespace {

/**
 * Advance (i, j) to the last common point of waypoint lists A and B,
 * handling the pass-through case where one path's bend lies in the middle
 * of the other's segment (the lists are edited so A[i] == B[j] == junction).
 */
void common_path_prefix(std::vector<Point>& A, std::vector<Point>& B, std::size_t& i,
                        std::size_t& j, double eps) {
    i = j = 0;
    bool advanced = true;
    while (advanced) {
        advanced = false;
        if (i + 1 < A.size() && j + 1 < B.size() && A[i + 1] == B[j + 1]) {
            ++i;
            ++j;
            advanced = true;
            continue;
        }
        if (i + 1 < A.size() && j + 1 < B.size()) {
            const Point junction = A[i];
            const Point na = A[i + 1];
            const Point nb = B[j + 1];
            if (point_segment_distance(na, junction, nb) <= eps &&
                distance(junction, na) < distance(junction, nb)) {
                ++i;
                B[j] = na;  // split B's segment at the pass-through point
                advanced = true;
                continue;
            }
            if (point_segment_distance(nb, junction, na) <= eps &&
                distance(junction, nb) < distance(junction, na)) {
                ++j;
                A[i] = nb;
                advanced = true;
                continue;
            }
        }
    }
}

}  // namespace

Point GeodesicEngine::junction_vertex(Point s, Point t, Point r) const {
    auto pt = shortest_path(s, t).waypoints;
    auto pr = shortest_path(s, r).waypoints;
    std::size_t i = 0, j = 0;
    common_path_prefix(pt, pr, i, j, tol_.eps_eq());
    return pt[i];
}

Funnel GeodesicEngine::build_funnel(Point s, Segment base) const {
    auto pa = shortest_path(s, base.a).waypoints;
    auto pb = shortest_path(s, base.b).waypoints;
    std::size_t i = 0, j = 0;
    common_path_prefix(pa, pb, i, j, tol_.eps_eq());
    Funnel f;
    f.cusp = pa[i];
    f.cusp_distance = polyline_length({pa.begin(), pa.begin() + static_cast<std::ptrdiff_t>(i) + 1});
    f.side_a.assign(pa.begin() + static_cast<std::ptrdiff_t>(i), pa.end());
    f.side_b.assign(pb.begin() + static_cast<std::ptrdiff_t>(j), pb.end());
    f.base = base;
    return f;
}

double DiagonalDistanceTable::eval(double t) const {
    const Cell& c = cell_at(t);
    return c.base_dist + distance(c.apex, point_at(t));
}

const DiagonalDistanceTable::Cell& DiagonalDistanceTable::cell_at(double t) const {
    // Cells cover [0,1] in order; pick the first with t <= t_hi.
    const auto it = std::partition_point(cells_.begin(), cells_.end(),
                                         [&](const Cell& c) { return c.t_hi < t; });
    return it == cells_.end() ? cells_.back() : *it;
}

DiagonalDistanceTable::DiagonalDistanceTable(const GeodesicEngine& engine, Point a,
                                             Point b, Point source)
    : a_(a), b_(b) {
    const double seg_len2 = norm2(b_ - a_);
    if (seg_len2 <= 0.0) {
        throw GeometryError("distance table: zero-length segment");
    }
    const Funnel f = engine.build_funnel(source, {a_, b_});
    const Point ab = b_ - a_;
    const auto param_of = [&](Point z) {
        return std::clamp(dot(z - a_, ab) / seg_len2, 0.0, 1.0);
    };

    // Breakpoint of chain vertex k (k >= 1): extension of the incoming chain
    // edge beyond vertex k, intersected with the base segment.
    const auto breakpoints = [&](const std::vector<Point>& chain) {
        std::vector<double> brk(chain.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 1; k < chain.size(); ++k) {
            const Point dir = chain[k] - chain[k - 1];
            const auto hit = ray_segment_param(chain[k], dir, a_, b_, 0.0, 1e-12);
            if (hit) brk[k] = param_of(chain[k] + *hit * dir);
        }
        return brk;
    };
    const auto cumdist = [&](const std::vector<Point>& chain) {
        std::vector<double> cum(chain.size(), f.cusp_distance);
        for (std::size_t k = 1; k < chain.size(); ++k) {
            cum[k] = cum[k - 1] + distance(chain[k - 1], chain[k]);
        }
        return cum;
    };

    auto brk_a = breakpoints(f.side_a);
    auto brk_b = breakpoints(f.side_b);
    const auto cum_a = cumdist(f.side_a);
    const auto cum_b = cumdist(f.side_b);
    // Concave chains give monotone breakpoints; enforce against roundoff.
    for (std::size_t k = 1; k < brk_a.size(); ++k) {
        if (std::isnan(brk_a[k])) brk_a[k] = (k >= 2 ? brk_a[k - 1] : 1.0);
        if (k >= 2) brk_a[k] = std::min(brk_a[k], brk_a[k - 1]);
    }
    for (std::size_t k = 1; k < brk_b.size(); ++k) {
        if (std::isnan(brk_b[k])) brk_b[k] = (k >= 2 ? brk_b[k - 1] : 0.0);
        if (k >= 2) brk_b[k] = std::max(brk_b[k], brk_b[k - 1]);
    }

    // Assemble cells from t=0 (endpoint a) to t=1. Interior anchors on the
    // a-side chain are side_a[1..ka-2]; anchor side_a[k] claims the interval
    // [brk_a[k+1], brk_a[k]] (with brk_a[ka-1] == 0 since that extension ray
    // passes through a itself). The cusp claims the middle, the b-side
    // chain mirrors the a-side toward t=1.
    const std::size_t ka = f.side_a.size();  // chain: cusp .. a
    const std::size_t kb = f.side_b.size();  // chain: cusp .. b
    double lo = 0.0;
    if (ka >= 3) {
        for (std::size_t k = ka - 2; k >= 1; --k) {
            const double hi = std::max(lo, brk_a[k]);
            cells_.push_back({lo, hi, f.side_a[k], cum_a[k]});
            lo = hi;
            if (k == 1) break;  // k is unsigned
        }
    }
    const double cusp_hi = (kb >= 2) ? std::max(lo, brk_b[1]) : 1.0;
    cells_.push_back({lo, cusp_hi, f.cusp, f.cusp_distance});
    lo = cusp_hi;
    for (std::size_t k = 1; k + 1 < kb; ++k) {
        const double hi = std::max(lo, brk_b[k + 1]);
        cells_.push_back({lo, hi, f.side_b[k], cum_b[k]});
        lo = hi;
    }
    cells_.back().t_hi = 1.0;
    cells_.front().t_lo = 0.0;

    // Minimum: per cell the optimum is the anchor's perpendicular foot on
    // the base line (funnel-tangent construction), clamped into the cell.
    min_dist_ = std::numeric_limits<double>::infinity();
    min_t_ = 0.0;
    for (const Cell& c : cells_) {
        const double foot = std::clamp(dot(c.apex - a_, ab) / seg_len2, c.t_lo, c.t_hi);
        const double dval = c.base_dist + distance(c.apex, point_at(foot));
        if (dval < min_dist_) {
            min_dist_ = dval;
            min_t_ = foot;
        }
    }
}

namespace {

/// Roots of |w - t*ab|^2 = R^2 inside [lo, hi] (ascending order).
void cell_level_roots(Point w, Point ab, double R, double lo, double hi,
                      std::vector<double>& out) {
    out.clear();
    if (R < 0.0) return;
    const double A = norm2(ab);
    const double B = -2.0 * dot(w, ab);
    const double C = norm2(w) - R * R;
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0 || A <= 0.0) return;
    const double sq = std::sqrt(disc);
    const double pad = 1e-12;
    for (double root : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
        if (root >= lo - pad && root <= hi + pad) {
            out.push_back(std::clamp(root, lo, hi));
        }
    }
}

}  // namespace

std::optional<double> DiagonalDistanceTable::solve_up(double t0, double target) const {
    std::vector<double> roots;
    for (const Cell& c : cells_) {
        if (c.t_hi < t0) continue;
        const double lo = std::max(c.t_lo, t0);
        cell_level_roots(c.apex - a_, b_ - a_, target - c.base_dist, lo, c.t_hi, roots);
        if (!roots.empty()) return roots.front();
    }
    return std::nullopt;
}

std::optional<double> DiagonalDistanceTable::solve_down(double t0, double target) const {
    std::vector<double> roots;
    for (auto it = cells_.rbegin(); it != cells_.rend(); ++it) {
        const Cell& c = *it;
        if (c.t_lo > t0) continue;
        const double hi = std::min(c.t_hi, t0);
        cell_level_roots(c.apex - a_, b_ - a_, target - c.base_dist, c.t_lo, hi, roots);
        if (!roots.empty()) return roots.back();
    }
    return std::nullopt;
}

}  // namespace gudg
