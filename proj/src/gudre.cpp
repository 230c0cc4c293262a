#include "gudg/gudre.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "gudg/errors.hpp"

namespace gudg {

namespace {

double wrap_ccw_angle(Point base, Point dir) {
    double a = std::atan2(cross(base, dir), dot(base, dir));
    if (a < 0.0) a += 2.0 * 3.14159265358979323846;
    return a;
}

/// Intersections of circles (c1, r1) and (c2, r2); 0, 1 or 2 points.
int circle_circle(Point c1, double r1, Point c2, double r2, Point out[2]) {
    const double dd = distance(c1, c2);
    if (dd <= 0.0) return 0;
    if (dd > r1 + r2) return 0;
    if (dd < std::abs(r1 - r2)) return 0;
    const double x = (r1 * r1 - r2 * r2 + dd * dd) / (2.0 * dd);
    const double h2 = r1 * r1 - x * x;
    const Point u = (c2 - c1) / dd;
    const Point base = c1 + x * u;
    if (h2 <= 0.0) {
        out[0] = base;
        return 1;
    }
    const double h = std::sqrt(h2);
    out[0] = base + h * perp(u);
    out[1] = base - h * perp(u);
    return 2;
}

double diagonal_param(const Diagonal& d, Point z) {
    const Point dir = d.a - d.b;
    const double len2 = norm2(dir);
    if (len2 <= 0.0) return 0.0;
    return dot(z - d.b, dir) / len2;
}

}  // namespace

void apply_site_perturbation(std::vector<Site>& sites, const SimplePolygon& poly,
                             const Tolerances& tol) {
    const double eps = tol.eps_perturb();
    for (std::size_t k = 0; k < sites.size(); ++k) {
        const double kk = static_cast<double>(k);
        Point off{kk * eps, kk * kk * eps};
        // The offset is a tie-breaking nudge; it must never move a site out of
        // the domain. Halve it until the shifted point stays strictly inside
        // (sites handed in exactly on the wall keep their position).
        Point p = sites[k].position + off;
        for (int it = 0; it < 80 && !poly.contains_strict(p); ++it) {
            off = 0.5 * off;
            p = sites[k].position + off;
        }
        if (poly.contains_strict(p)) sites[k].position = p;
    }
}

std::vector<int> right_side_boundary_chain(const SimplePolygon& poly, const Diagonal& d) {
    const int n = static_cast<int>(poly.size());
    if (d.va < 0 || d.vb < 0) throw GeometryError("diagonal lacks polygon vertex ids");
    // The polygon ring is counterclockwise, so the subpolygon bounded by the
    // index-order walk vb -> va plus the closing chord va -> vb is traversed
    // counterclockwise too; along the closing chord (travel direction -ey)
    // its interior lies to the left, which is the +ex side. Testing line
    // sides of far chain vertices instead is wrong for nonconvex polygons,
    // where either walk may wander across the supporting line.
    std::vector<int> out{d.vb};
    for (int v = (d.vb + 1) % n; ; v = (v + 1) % n) {
        out.push_back(v);
        if (v == d.va) break;
        if (static_cast<int>(out.size()) > n + 1) throw GeometryError("boundary walk failed");
    }
    return out;
}

ProjectionOrder compare_by_diagonal_projection(const GeodesicEngine& engine, const Diagonal& d,
                                               Point p, Point q) {
    const Point zp = closest_point_on_diagonal(engine, d, p);
    const Point zq = closest_point_on_diagonal(engine, d, q);
    return compare_by_diagonal_projection(engine, d, p, zp, diagonal_param(d, zp), q, zq,
                                          diagonal_param(d, zq));
}

ProjectionOrder compare_by_diagonal_projection(const GeodesicEngine& engine, const Diagonal& d,
                                               Point p, Point zp, double zp_t, Point q, Point zq,
                                               double zq_t) {
    (void)zq;  // within tolerance of zp whenever it is consulted below
    const Tolerances& tol = engine.tol();
    const double len = d.length();
    if ((zq_t - zp_t) * len > tol.eps_eq()) return ProjectionOrder::p_before_q;
    if ((zp_t - zq_t) * len > tol.eps_eq()) return ProjectionOrder::q_before_p;

    // Shared attachment point; decide containment first, then fan order.
    const Point z = zp;
    const double dzp = engine.geodesic_distance(z, p);
    const double dzq = engine.geodesic_distance(z, q);
    const double dpq = engine.geodesic_distance(p, q);
    const double gate = std::max(tol.eps_eq(), 1e-7 * tol.scale);
    const bool p_on = std::abs(dzp + dpq - dzq) <= gate;
    const bool q_on = std::abs(dzq + dpq - dzp) <= gate;
    if (p_on || q_on) {
        if (p_on && q_on) {
            // p and q within tolerance of each other along the path.
            return dzp <= dzq ? ProjectionOrder::p_on_geodesic_dq
                              : ProjectionOrder::q_on_geodesic_dp;
        }
        return p_on ? ProjectionOrder::p_on_geodesic_dq : ProjectionOrder::q_on_geodesic_dp;
    }

    const Point c = engine.junction_vertex(z, p, q);
    Point base;
    if (distance(c, z) <= tol.eps_eq()) {
        base = normalized(d.b - d.a);  // fan starts pointing down the diagonal
    } else {
        base = normalized(engine.anchors(c, z).first - c);
    }
    const Point dir_p = normalized(engine.anchors(c, p).first - c);
    const Point dir_q = normalized(engine.anchors(c, q).first - c);
    const double ap = wrap_ccw_angle(base, dir_p);
    const double aq = wrap_ccw_angle(base, dir_q);
    return ap < aq ? ProjectionOrder::p_before_q : ProjectionOrder::q_before_p;
}

// ---------------------------------------------------------------------------
// EnvelopeTree
// ---------------------------------------------------------------------------

EnvelopeTree::EnvelopeTree(const GeodesicEngine& engine, Diagonal d, std::vector<Site> sites,
                           double radius)
    : engine_(&engine), d_(d), radius_(radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
    chain_ = right_side_boundary_chain(engine.polygon(), d_);
    ring_.reserve(chain_.size());
    for (int v : chain_) ring_.push_back(engine.polygon()[static_cast<std::size_t>(v)]);

    struct Prepared {
        Site site;
        DiagonalDistanceTable table;
        double key;
    };
    std::vector<Prepared> prepared;
    prepared.reserve(sites.size());
    for (const Site& s : sites) {
        if (slot_of_id_.count(s.id) || unreachable_.count(s.id))
            throw std::invalid_argument("duplicate site id");
        DiagonalDistanceTable table(engine, d_.b, d_.a, s.position);
        if (table.min_distance() > radius_) {
            unreachable_.emplace(s.id, s);
            ++live_count_;
            continue;
        }
        const double key = table.eval(0.0);  // distance to the lower diagonal endpoint
        prepared.push_back({s, std::move(table), key});
        slot_of_id_.emplace(s.id, 0);  // placeholder, fixed below
    }
    std::sort(prepared.begin(), prepared.end(), [](const Prepared& x, const Prepared& y) {
        return x.key != y.key ? x.key < y.key : x.site.id < y.site.id;
    });
    slots_.reserve(prepared.size());
    tables_.reserve(prepared.size());
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        SlotState st;
        st.site = prepared[i].site;
        slots_.push_back(st);
        tables_.push_back(std::move(prepared[i].table));
        slot_of_id_[prepared[i].site.id] = static_cast<int>(i);
        ++live_count_;
    }
    chain_vertex_dist_.assign(slots_.size(),
                              std::vector<double>(chain_.size(),
                                                  std::numeric_limits<double>::quiet_NaN()));
    if (!slots_.empty()) root_ = build(0, static_cast<int>(slots_.size()));
}

double EnvelopeTree::dist(int slot, Point p) const {
    return engine_->geodesic_distance(slots_[static_cast<std::size_t>(slot)].site.position, p);
}

EnvelopeEnd EnvelopeTree::make_end(Point location, EndKind kind, int boundary_edge) const {
    EnvelopeEnd e;
    e.location = location;
    e.kind = kind;
    e.boundary_edge = boundary_edge;
    if (kind == EndKind::on_diagonal) {
        e.z = location;
        e.z_t = diagonal_param(d_, location);
    } else {
        e.z = closest_point_on_diagonal(*engine_, d_, location);
        e.z_t = diagonal_param(d_, e.z);
    }
    return e;
}

EnvelopeEnd EnvelopeTree::diagonal_end(int slot, bool upper) const {
    const DiagonalDistanceTable& table = tables_[static_cast<std::size_t>(slot)];
    std::optional<double> t = upper ? table.solve_up(table.min_t(), radius_)
                                    : table.solve_down(table.min_t(), radius_);
    const double tt = t.value_or(upper ? 1.0 : 0.0);
    return make_end(d_.point_at(tt), EndKind::on_diagonal);
}

double EnvelopeTree::chain_vertex_dist(int slot, std::size_t j) const {
    double& cached = chain_vertex_dist_[static_cast<std::size_t>(slot)][j];
    if (std::isnan(cached))
        cached = dist(slot, engine_->polygon()[static_cast<std::size_t>(chain_[j])]);
    return cached;
}

EnvelopeEnd EnvelopeTree::envelope_handover(int lo_slot, int hi_slot) const {
    const Tolerances& tol = engine_->tol();
    const SimplePolygon& poly = engine_->polygon();
    const Point ps = slots_[static_cast<std::size_t>(lo_slot)].site.position;
    const Point pt = slots_[static_cast<std::size_t>(hi_slot)].site.position;
    auto f = [&](Point x) { return dist(lo_slot, x) - dist(hi_slot, x); };
    auto fv = [&](std::size_t j) {
        return chain_vertex_dist(lo_slot, j) - chain_vertex_dist(hi_slot, j);
    };
    const int n = static_cast<int>(poly.size());
    auto edge_of = [&](std::size_t j) {
        return (chain_[j + 1] == (chain_[j] + 1) % n) ? chain_[j] : chain_[j + 1];
    };
    std::optional<Point> best;
    int best_edge = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    auto bisect_edge = [&](std::size_t j, double ulo, double uhi, double flo) {
        const Point a = poly[static_cast<std::size_t>(chain_[j])];
        const Point b = poly[static_cast<std::size_t>(chain_[j + 1])];
        for (int it = 0; it < 60; ++it) {
            const double um = 0.5 * (ulo + uhi);
            const double fm = f(a + um * (b - a));
            if (std::abs(fm) <= tol.eps_root()) {
                ulo = uhi = um;
                break;
            }
            if ((flo <= 0.0) != (fm <= 0.0)) {
                uhi = um;
            } else {
                ulo = um;
                flo = fm;
            }
        }
        const Point x = a + 0.5 * (ulo + uhi) * (b - a);
        const double dx = dist(lo_slot, x);
        if (dx < best_dist) {
            best_dist = dx;
            best = x;
            best_edge = edge_of(j);
        }
    };

    // 1. Hand-over on the region boundary: the adjacent owners' equidistant
    //    point crosses the right-side chain at most once within disk reach,
    //    so a sign change between the chain ends pins it by binary search.
    const std::size_t last = chain_.size() - 1;
    double f_lo = fv(0);
    const double f_hi = fv(last);
    if ((f_lo <= 0.0) != (f_hi <= 0.0)) {
        std::size_t jl = 0, jh = last;
        while (jh - jl > 1) {
            const std::size_t jm = jl + (jh - jl) / 2;
            const double fm = fv(jm);
            if ((f_lo <= 0.0) != (fm <= 0.0)) {
                jh = jm;
            } else {
                jl = jm;
                f_lo = fm;
            }
        }
        bisect_edge(jl, 0.0, 1.0, f_lo);
    }
    if (best && best_dist <= radius_ + tol.eps_eq())
        return make_end(*best, EndKind::on_boundary, best_edge);

    // 2. Hand-over strictly inside: the unique point at distance `radius`
    //    from both sites. Anchor iteration: within one shortest-path-map cell
    //    the distance is additively-weighted Euclidean, so the point solves a
    //    two-circle system around the current anchors; re-anchoring after each
    //    solve converges once the cell stabilizes.
    const EnvelopeEnd upper_lo = diagonal_end(lo_slot, true);
    const EnvelopeEnd lower_hi = diagonal_end(hi_slot, false);
    std::vector<Point> seeds{upper_lo.location, lower_hi.location,
                             0.5 * (upper_lo.location + lower_hi.location)};
    if (best) seeds.push_back(*best);
    for (Point x : seeds) {
        for (int it = 0; it < 60; ++it) {
            if (distance(x, ps) <= tol.eps_eq() || distance(x, pt) <= tol.eps_eq()) break;
            if (!engine_->contains(x)) break;
            const double ds = dist(lo_slot, x);
            const double dt = dist(hi_slot, x);
            if (std::abs(ds - radius_) <= tol.eps_root() &&
                std::abs(dt - radius_) <= tol.eps_root() && in_query_side(x, tol.eps_in())) {
                return make_end(x, EndKind::bisector_envelope);
            }
            const Point as = engine_->anchors(ps, x).second;
            const Point at = engine_->anchors(pt, x).second;
            const double rs = radius_ - (ds - distance(as, x));
            const double rt = radius_ - (dt - distance(at, x));
            if (rs <= 0.0 || rt <= 0.0) break;
            Point sols[2];
            const int k = circle_circle(as, rs, at, rt, sols);
            if (k == 0) break;
            Point nxt = sols[0];
            if (k == 2) {
                auto score = [&](Point y) {
                    double sc = distance(y, x);
                    if (!engine_->contains(y) || !in_query_side(y, tol.eps_in()))
                        sc += 1e6 * tol.scale;
                    return sc;
                };
                if (score(sols[1]) < score(sols[0])) nxt = sols[1];
            }
            if (!engine_->contains(nxt)) break;
            x = nxt;
        }
    }

    // 3. Dense boundary re-scan: catches crossings the endpoint sign test
    //    misses (an even number of crossings along the chain).
    for (std::size_t j = 0; j + 1 < chain_.size(); ++j) {
        const Point a = poly[static_cast<std::size_t>(chain_[j])];
        const Point b = poly[static_cast<std::size_t>(chain_[j + 1])];
        const int kSub = 8;
        double prev_u = 0.0;
        double prev_f = f(a);
        for (int k = 1; k <= kSub; ++k) {
            const double u = static_cast<double>(k) / kSub;
            const double fu = f(a + u * (b - a));
            if ((prev_f <= 0.0) != (fu <= 0.0)) bisect_edge(j, prev_u, u, prev_f);
            prev_u = u;
            prev_f = fu;
        }
    }
    if (best && best_dist <= radius_ + tol.eps_eq())
        return make_end(*best, EndKind::on_boundary, best_edge);

    // 4. Fallback: walk the first site's disk boundary from its upper
    //    diagonal crossing until the other site's distance reaches `radius`.
    counters_.handover_marches++;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int prim = attempt == 0 ? lo_slot : hi_slot;
        const int other = attempt == 0 ? hi_slot : lo_slot;
        const Point start =
            attempt == 0 ? diagonal_end(lo_slot, true).location : lower_hi.location;
        if (dist(other, start) - radius_ >= 0.0) continue;  // wrong-signed start
        const Point prim_pos = slots_[static_cast<std::size_t>(prim)].site.position;
        auto project = [&](Point y) -> std::optional<Point> {
            for (int r = 0; r < 6; ++r) {
                if (!engine_->contains(y) || !in_query_side(y, tol.eps_in()))
                    return std::nullopt;
                if (distance(y, prim_pos) <= tol.eps_eq()) return std::nullopt;
                const Point a = engine_->anchors(prim_pos, y).second;
                const double ra = radius_ - (dist(prim, y) - distance(a, y));
                if (ra <= 0.0) return std::nullopt;
                const Point yy = a + ra * normalized(y - a);
                if (distance(yy, y) <= tol.eps_root()) return yy;
                y = yy;
            }
            return std::nullopt;
        };
        Point x = start;
        Point last_dir = d_.frame.ex;  // into the query side
        double h = 1e-2 * tol.scale;
        double g = dist(other, x) - radius_;
        for (int step = 0; step < 20000; ++step) {
            if (distance(x, prim_pos) <= tol.eps_eq()) break;
            const Point a = engine_->anchors(prim_pos, x).second;
            Point tan = perp(normalized(x - a));
            if (dot(tan, last_dir) < 0.0) tan = -1.0 * tan;
            std::optional<Point> nxt = project(x + h * tan);
            if (!nxt) {
                h *= 0.5;
                if (h < 1e-7 * tol.scale) break;
                continue;
            }
            const double gn = dist(other, *nxt) - radius_;
            if ((g <= 0.0) != (gn <= 0.0)) {
                if (h <= tol.eps_root()) {
                    const Point res = std::abs(g) < std::abs(gn) ? x : *nxt;
                    return make_end(res, EndKind::bisector_envelope);
                }
                h *= 0.5;
                continue;
            }
            last_dir = normalized(*nxt - x);
            x = *nxt;
            g = gn;
            h = std::min(h * 1.5, 1e-2 * tol.scale);
        }
    }
    throw GeometryError("arc hand-over point not found (site owns no boundary arc here)");
}

EnvelopeEnd EnvelopeTree::upper_end_of(int slot, int succ_slot) const {
    const EnvelopeEnd diag = diagonal_end(slot, true);
    if (succ_slot < 0 || dist(succ_slot, diag.location) > radius_) return diag;
    return envelope_handover(slot, succ_slot);
}

EnvelopeEnd EnvelopeTree::lower_end_of(int slot, int pred_slot) const {
    const EnvelopeEnd diag = diagonal_end(slot, false);
    if (pred_slot < 0 || dist(pred_slot, diag.location) > radius_) return diag;
    return envelope_handover(pred_slot, slot);
}

EnvelopeTree::ArcEntry EnvelopeTree::arc_entry(int slot, int pred_slot, int succ_slot) const {
    ArcEntry e;
    e.site = slots_[static_cast<std::size_t>(slot)].site;
    e.a = lower_end_of(slot, pred_slot);
    e.b = upper_end_of(slot, succ_slot);
    return e;
}

// --- owner-list plumbing ----------------------------------------------------

std::vector<int> EnvelopeTree::list_of(int head) const {
    std::vector<int> out;
    for (int s = head; s >= 0; s = slots_[static_cast<std::size_t>(s)].next) out.push_back(s);
    return out;
}

int EnvelopeTree::list_last(int head) const {
    int last = -1;
    for (int s = head; s >= 0; s = slots_[static_cast<std::size_t>(s)].next) last = s;
    return last;
}

// --- marker scans -----------------------------------------------------------

EnvelopeTree::ScanResult EnvelopeTree::scan_markers_forward(const std::vector<int>& lo_list,
                                                            const std::vector<int>& hi_list,
                                                            std::size_t si, std::size_t ti) const {
    ScanResult res;
    if (lo_list.empty()) {
        res.r_lo = -1;
        res.r_hi = hi_list.empty() ? -1 : hi_list.front();
        return res;
    }
    if (hi_list.empty()) {
        res.r_lo = lo_list.back();
        res.r_hi = -1;
        return res;
    }
    auto a_of = [&](int slot) { return slots_[static_cast<std::size_t>(slot)].a.location; };
    auto b_of = [&](int slot) { return slots_[static_cast<std::size_t>(slot)].b.location; };
    while (true) {
        const int s = lo_list[si];
        const int t = hi_list[ti];
        const Point bt = b_of(t);
        if (dist(s, bt) < dist(t, bt)) {  // t's whole arc is dominated from below
            if (ti + 1 < hi_list.size()) {
                ++ti;
                ++res.steps;
            } else {
                res.r_lo = lo_list.back();
                res.r_hi = -1;
                return res;
            }
        } else {
            const Point as = a_of(s);
            if (dist(s, as) <= dist(t, as)) {  // s keeps its far end, so it survives
                if (si + 1 < lo_list.size()) {
                    ++si;
                    ++res.steps;
                } else {
                    res.r_lo = s;
                    res.r_hi = t;
                    return res;
                }
            } else {
                if (si == 0) {
                    res.r_lo = -1;
                    res.r_hi = hi_list.front();
                    return res;
                }
                const int rl = lo_list[si - 1];
                while (ti < hi_list.size() &&
                       dist(rl, b_of(hi_list[ti])) < dist(hi_list[ti], b_of(hi_list[ti]))) {
                    ++ti;
                    ++res.steps;
                }
                res.r_lo = rl;
                res.r_hi = ti < hi_list.size() ? hi_list[ti] : -1;
                return res;
            }
        }
    }
}

EnvelopeTree::ScanResult EnvelopeTree::scan_markers_backward(const std::vector<int>& lo_list,
                                                             const std::vector<int>& hi_list,
                                                             std::size_t ti,
                                                             std::size_t si) const {
    // Mirror of the forward scan: walk both lists from the top; elimination
    // candidates come from the low list (tested at their lower arc end, the
    // end far from the encroaching high-side arcs), survivors from the high
    // list (tested at their upper arc end).
    ScanResult res;
    if (hi_list.empty()) {
        res.r_hi = -1;
        res.r_lo = lo_list.empty() ? -1 : lo_list.back();
        return res;
    }
    if (lo_list.empty()) {
        res.r_lo = -1;
        res.r_hi = hi_list.front();
        return res;
    }
    auto a_of = [&](int slot) { return slots_[static_cast<std::size_t>(slot)].a.location; };
    auto b_of = [&](int slot) { return slots_[static_cast<std::size_t>(slot)].b.location; };
    std::ptrdiff_t tu = static_cast<std::ptrdiff_t>(ti);
    std::ptrdiff_t sw = static_cast<std::ptrdiff_t>(si);
    while (true) {
        const int t = lo_list[static_cast<std::size_t>(tu)];
        const int s = hi_list[static_cast<std::size_t>(sw)];
        const Point at = a_of(t);
        if (dist(s, at) < dist(t, at)) {  // t's whole arc is dominated from above
            if (tu > 0) {
                --tu;
                ++res.steps;
            } else {
                res.r_lo = -1;
                res.r_hi = hi_list.front();
                return res;
            }
        } else {
            const Point bs = b_of(s);
            if (dist(s, bs) <= dist(t, bs)) {  // s keeps its far end, so it survives
                if (sw > 0) {
                    --sw;
                    ++res.steps;
                } else {
                    res.r_hi = s;
                    res.r_lo = t;
                    return res;
                }
            } else {
                if (sw + 1 >= static_cast<std::ptrdiff_t>(hi_list.size())) {
                    res.r_hi = -1;
                    res.r_lo = lo_list.back();
                    return res;
                }
                const int rh = hi_list[static_cast<std::size_t>(sw + 1)];
                while (tu >= 0) {
                    const int tt = lo_list[static_cast<std::size_t>(tu)];
                    if (dist(rh, a_of(tt)) < dist(tt, a_of(tt))) {
                        --tu;
                        ++res.steps;
                    } else {
                        break;
                    }
                }
                res.r_hi = rh;
                res.r_lo = tu >= 0 ? lo_list[static_cast<std::size_t>(tu)] : -1;
                return res;
            }
        }
    }
}

// --- build ------------------------------------------------------------------

int EnvelopeTree::build(int lo, int hi) {
    const int v = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(v)].lo = lo;
    nodes_[static_cast<std::size_t>(v)].hi = hi;
    if (hi - lo == 1) {
        Node& node = nodes_[static_cast<std::size_t>(v)];
        node.leaf_slot = lo;
        const ArcEntry e = arc_entry(lo, -1, -1);
        slots_[static_cast<std::size_t>(lo)].a = e.a;
        slots_[static_cast<std::size_t>(lo)].b = e.b;
        node.arcs_head = node.arcs_tail = lo;
        return v;
    }
    const int mid = lo + (hi - lo + 1) / 2;
    const int left = build(lo, mid);
    const int right = build(mid, hi);
    nodes_[static_cast<std::size_t>(v)].left = left;
    nodes_[static_cast<std::size_t>(v)].right = right;
    stitch(v);
    return v;
}

void EnvelopeTree::stitch(int v) {
    Node& node = nodes_[static_cast<std::size_t>(v)];
    const std::vector<int> lo_list = list_of(nodes_[static_cast<std::size_t>(node.left)].arcs_head);
    const std::vector<int> hi_list =
        list_of(nodes_[static_cast<std::size_t>(node.right)].arcs_head);
    const ScanResult scan = scan_markers_forward(lo_list, hi_list, 0, 0);
    node.r_lo = scan.r_lo;
    node.r_hi = scan.r_hi;
    if (node.r_lo >= 0 && node.r_hi >= 0) refresh_merged_ends(v);
    ascend(v);
}

void EnvelopeTree::refresh_merged_ends(int v) {
    Node& node = nodes_[static_cast<std::size_t>(v)];
    const int rl = node.r_lo;
    const int rh = node.r_hi;
    const EnvelopeEnd diag_b = diagonal_end(rl, true);
    const EnvelopeEnd diag_a = diagonal_end(rh, false);
    const bool b_needs_handover = dist(rh, diag_b.location) <= radius_;
    const bool a_needs_handover = dist(rl, diag_a.location) <= radius_;
    std::optional<EnvelopeEnd> shared;
    if (b_needs_handover || a_needs_handover) shared = envelope_handover(rl, rh);
    node.y2_b_rlo = b_needs_handover ? *shared : diag_b;
    node.y2_a_rhi = a_needs_handover ? *shared : diag_a;
}

// --- descend / ascend -------------------------------------------------------

void EnvelopeTree::descend(int v) {
    Node& node = nodes_[static_cast<std::size_t>(v)];
    const int u = node.left;
    const int w = node.right;
    if (u < 0 && w < 0) return;
    auto move_all = [&](Node& from, Node& to, bool to_front) {
        if (from.arcs_head < 0) return;
        if (to.arcs_head < 0) {
            to.arcs_head = from.arcs_head;
            to.arcs_tail = from.arcs_tail;
        } else if (to_front) {
            slots_[static_cast<std::size_t>(from.arcs_tail)].next = to.arcs_head;
            slots_[static_cast<std::size_t>(to.arcs_head)].prev = from.arcs_tail;
            to.arcs_head = from.arcs_head;
        } else {
            slots_[static_cast<std::size_t>(to.arcs_tail)].next = from.arcs_head;
            slots_[static_cast<std::size_t>(from.arcs_head)].prev = to.arcs_tail;
            to.arcs_tail = from.arcs_tail;
        }
        from.arcs_head = from.arcs_tail = -1;
    };
    if (u < 0 || w < 0) {
        Node& child = nodes_[static_cast<std::size_t>(u < 0 ? w : u)];
        move_all(node, child, true);
        return;
    }
    Node& un = nodes_[static_cast<std::size_t>(u)];
    Node& wn = nodes_[static_cast<std::size_t>(w)];
    if (node.r_lo >= 0 && node.r_hi >= 0) {
        // Cut the merged list between the two markers.
        SlotState& rl = slots_[static_cast<std::size_t>(node.r_lo)];
        SlotState& rh = slots_[static_cast<std::size_t>(node.r_hi)];
        Node prefix, suffix;
        prefix.arcs_head = node.arcs_head;
        prefix.arcs_tail = node.r_lo;
        suffix.arcs_head = node.r_hi;
        suffix.arcs_tail = node.arcs_tail;
        rl.next = -1;
        rh.prev = -1;
        node.arcs_head = node.arcs_tail = -1;
        move_all(prefix, un, true);
        move_all(wn, suffix, true);
        wn.arcs_head = suffix.arcs_head;
        wn.arcs_tail = suffix.arcs_tail;
        rl.b = node.y1_b_rlo;  // ends become child-relative
        rh.a = node.y1_a_rhi;
    } else if (node.r_lo >= 0) {
        move_all(node, un, true);
    } else if (node.r_hi >= 0) {
        move_all(node, wn, false);
    }
}

void EnvelopeTree::ascend(int v) {
    Node& node = nodes_[static_cast<std::size_t>(v)];
    const int u = node.left;
    const int w = node.right;
    if (u < 0 && w < 0) return;
    auto take_all = [&](Node& from) {
        node.arcs_head = from.arcs_head;
        node.arcs_tail = from.arcs_tail;
        from.arcs_head = from.arcs_tail = -1;
    };
    if (u < 0 || w < 0) {
        take_all(nodes_[static_cast<std::size_t>(u < 0 ? w : u)]);
        return;
    }
    Node& un = nodes_[static_cast<std::size_t>(u)];
    Node& wn = nodes_[static_cast<std::size_t>(w)];
    if (node.r_lo >= 0 && node.r_hi >= 0) {
        SlotState& rl = slots_[static_cast<std::size_t>(node.r_lo)];
        SlotState& rh = slots_[static_cast<std::size_t>(node.r_hi)];
        // Split the left child's list after r_lo and the right child's before r_hi.
        const int u_rest = rl.next;
        rl.next = -1;
        int u_rest_head = u_rest;
        int u_rest_tail = u_rest >= 0 ? un.arcs_tail : -1;
        if (u_rest >= 0) slots_[static_cast<std::size_t>(u_rest)].prev = -1;
        const int prefix_head = un.arcs_head;
        const int prefix_tail = node.r_lo;

        const int w_rest_tail = rh.prev;
        rh.prev = -1;
        int w_rest_head = w_rest_tail >= 0 ? wn.arcs_head : -1;
        if (w_rest_tail >= 0) slots_[static_cast<std::size_t>(w_rest_tail)].next = -1;
        const int suffix_head = node.r_hi;
        const int suffix_tail = wn.arcs_tail;

        node.arcs_head = prefix_head;
        slots_[static_cast<std::size_t>(prefix_tail)].next = suffix_head;
        slots_[static_cast<std::size_t>(suffix_head)].prev = prefix_tail;
        node.arcs_tail = suffix_tail;

        un.arcs_head = u_rest_head;
        un.arcs_tail = u_rest_tail;
        wn.arcs_head = w_rest_head;
        wn.arcs_tail = w_rest_tail;

        node.y1_b_rlo = rl.b;  // child-relative values, kept for the next descend
        node.y1_a_rhi = rh.a;
        rl.b = node.y2_b_rlo;  // ends become merged-set-relative
        rh.a = node.y2_a_rhi;
    } else if (node.r_lo >= 0) {
        take_all(un);
    } else if (node.r_hi >= 0) {
        take_all(wn);
    }
}

// --- query ------------------------------------------------------------------

bool EnvelopeTree::in_query_side(Point p, double eps) const {
    // Even-odd rule on the chain ring; the wrap-around edge is the diagonal.
    bool inside = false;
    const std::size_t m = ring_.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point a = ring_[i];
        const Point b = ring_[(i + 1) % m];
        if (point_segment_distance(p, a, b) <= eps) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

std::optional<Site> EnvelopeTree::query(Point q) {
    const Tolerances& tol = engine_->tol();
    if (!engine_->contains(q)) throw OutsidePolygonError("query point outside the polygon");
    if (!in_query_side(q, tol.eps_in()))
        throw OutsidePolygonError("query point on the site side of the diagonal");
    // Nudge points sitting on the diagonal itself into the region so the
    // projection comparisons downstream see a one-sided configuration.
    const double fx = d_.frame.to_frame(q).x;
    if (std::abs(fx) < tol.eps_in() &&
        point_segment_distance(q, d_.b, d_.a) < tol.eps_in()) {
        q = q + (tol.eps_in() - fx) * d_.frame.ex;
    }
    if (root_ < 0 || nodes_[static_cast<std::size_t>(root_)].deleted) return std::nullopt;
    const Point zq = closest_point_on_diagonal(*engine_, d_, q);
    return query_node(root_, q, zq, diagonal_param(d_, zq));
}

std::optional<Site> EnvelopeTree::subtree_linear_scan(int v, Point q) const {
    const Node& node = nodes_[static_cast<std::size_t>(v)];
    if (node.deleted) return std::nullopt;
    if (node.leaf_slot >= 0) {
        const SlotState& st = slots_[static_cast<std::size_t>(node.leaf_slot)];
        if (st.live && dist(node.leaf_slot, q) <= radius_) return st.site;
        return std::nullopt;
    }
    if (node.left >= 0)
        if (auto r = subtree_linear_scan(node.left, q)) return r;
    if (node.right >= 0)
        if (auto r = subtree_linear_scan(node.right, q)) return r;
    return std::nullopt;
}

std::optional<Site> EnvelopeTree::query_node(int v, Point q, Point zq, double zq_t) const {
    const Tolerances& tol = engine_->tol();
    while (true) {
        const Node& node = nodes_[static_cast<std::size_t>(v)];
        if (node.leaf_slot >= 0) {
            const SlotState& st = slots_[static_cast<std::size_t>(node.leaf_slot)];
            if (st.live && dist(node.leaf_slot, q) <= radius_) return st.site;
            return std::nullopt;
        }
        if (node.left < 0) {
            v = node.right;
            continue;
        }
        if (node.right < 0) {
            v = node.left;
            continue;
        }
        if (node.r_lo < 0) {
            v = node.right;
            continue;
        }
        if (node.r_hi < 0) {
            v = node.left;
            continue;
        }
        const EnvelopeEnd& b = node.y2_b_rlo;
        const ProjectionOrder cmp =
            compare_by_diagonal_projection(*engine_, d_, q, zq, zq_t, b.location, b.z, b.z_t);
        if (cmp == ProjectionOrder::p_before_q) {
            v = node.left;
            continue;
        }
        if (cmp == ProjectionOrder::q_before_p) {
            v = node.right;
            continue;
        }
        if (cmp == ProjectionOrder::p_on_geodesic_dq) {
            // q lies on the path from the diagonal to b, so r_lo covers it;
            // verify to keep the answer sound under tolerance slack.
            if (dist(node.r_lo, q) <= radius_)
                return slots_[static_cast<std::size_t>(node.r_lo)].site;
        }
        // b lies on the path from the diagonal to q (or the verification above
        // failed, which means q sits just beyond b on that path).
        const EnvelopeEnd& a = node.y2_a_rhi;
        if (b.kind != EndKind::on_boundary ||
            distance(a.location, b.location) > std::max(tol.eps_eq(), 1e-7 * tol.scale)) {
            return std::nullopt;
        }
        const SimplePolygon& poly = engine_->polygon();
        const int e = b.boundary_edge;
        const Point e0 = poly.vertex(static_cast<std::size_t>(e));
        const Point e1 = poly.vertex(static_cast<std::size_t>(e) + 1);
        const double near_gate = std::max(tol.eps_eq(), 1e-7 * tol.scale);
        bool use_fallback = false;
        if (distance(b.location, e0) <= near_gate || distance(b.location, e1) <= near_gate)
            use_fallback = true;
        bool left_side = false;
        if (!use_fallback) {
            const double dzb = engine_->geodesic_distance(zq, b.location);
            const double gate = std::max(tol.eps_eq(), 1e-6 * tol.scale);
            const bool via_e0 =
                std::abs(engine_->geodesic_distance(zq, e0) + distance(e0, b.location) - dzb) <=
                gate;
            const bool via_e1 =
                std::abs(engine_->geodesic_distance(zq, e1) + distance(e1, b.location) - dzb) <=
                gate;
            if (via_e0 == via_e1) {
                use_fallback = true;  // ambiguous: neither or both qualify
            } else {
                // Polygon edges run counterclockwise, so the interior lies
                // left of e0->e1: approaching b along the edge direction the
                // interior is on the left; against it, on the right.
                left_side = via_e0;
            }
        }
        if (use_fallback) {
            counters_.boundary_fallbacks++;
            std::cerr << "gudre: boundary hand-over too close to a vertex; "
                         "falling back to a subtree scan\n";
            return subtree_linear_scan(v, q);
        }
        v = left_side ? node.right : node.left;
    }
}

// --- deletion ---------------------------------------------------------------

bool EnvelopeTree::is_live(int site_id) const {
    if (unreachable_.count(site_id)) return true;
    auto it = slot_of_id_.find(site_id);
    return it != slot_of_id_.end() && slots_[static_cast<std::size_t>(it->second)].live;
}

bool EnvelopeTree::erase_if_present(int site_id) {
    if (!is_live(site_id)) return false;
    erase(site_id);
    return true;
}

void EnvelopeTree::erase(int site_id) {
    if (unreachable_.count(site_id)) {
        unreachable_.erase(site_id);
        --live_count_;
        return;
    }
    auto it = slot_of_id_.find(site_id);
    if (it == slot_of_id_.end() || !slots_[static_cast<std::size_t>(it->second)].live)
        throw std::invalid_argument("unknown or already-deleted site");
    delete_rec(root_, it->second);
    --live_count_;
}

void EnvelopeTree::delete_rec(int v, int slot) {
    Node& node = nodes_[static_cast<std::size_t>(v)];
    descend(v);
    if (node.leaf_slot >= 0) {
        SlotState& st = slots_[static_cast<std::size_t>(slot)];
        st.live = false;
        st.prev = st.next = -1;
        node.arcs_head = node.arcs_tail = -1;
        node.deleted = true;
        return;
    }
    if (node.left < 0 || node.right < 0) {
        const bool only_left = node.right < 0;
        const int child = only_left ? node.left : node.right;
        delete_rec(child, slot);
        if (nodes_[static_cast<std::size_t>(child)].deleted) {
            (only_left ? node.left : node.right) = -1;
            node.deleted = true;
        }
        ascend(v);
        return;
    }

    const int u = node.left;
    const int w = node.right;
    const bool in_left = slot < nodes_[static_cast<std::size_t>(u)].hi;
    const bool was_lo_marker = (slot == node.r_lo);
    const bool was_hi_marker = (slot == node.r_hi);
    const int old_r_lo = node.r_lo;
    const int old_r_hi = node.r_hi;
    // Scan restart anchors, read before the recursion mutates the child list.
    // Removing the victim can resurface entries that it alone had covered, and
    // those entries splice into the list exactly where the victim's portion
    // was: after its old predecessor and before its old successor. The rescan
    // must therefore restart at the neighbour on the already-excluded side of
    // the marker (predecessor for r_hi, successor for r_lo) so it still walks
    // every resurfaced entry. When the victim sat at the end of its list, the
    // hint stays -1 and the rescan falls back to that end of the new list.
    int restart_hint = -1;
    if (was_hi_marker) {
        restart_hint = slots_[static_cast<std::size_t>(slot)].prev;
    } else if (was_lo_marker) {
        restart_hint = slots_[static_cast<std::size_t>(slot)].next;
    }

    delete_rec(in_left ? u : w, slot);
    if (nodes_[static_cast<std::size_t>(in_left ? u : w)].deleted) {
        (in_left ? node.left : node.right) = -1;
        ascend(v);
        return;
    }

    if (was_lo_marker || was_hi_marker) {
        counters_.marker_rescans++;
        const std::vector<int> lo_list = list_of(nodes_[static_cast<std::size_t>(u)].arcs_head);
        const std::vector<int> hi_list = list_of(nodes_[static_cast<std::size_t>(w)].arcs_head);
        auto index_of = [](const std::vector<int>& list, int target, std::size_t fallback) {
            if (target < 0) return fallback;
            for (std::size_t i = 0; i < list.size(); ++i)
                if (list[i] == target) return i;
            return fallback;
        };
        ScanResult res;
        if (was_hi_marker) {
            const std::size_t si = index_of(lo_list, old_r_lo, 0);
            const std::size_t ti = index_of(hi_list, restart_hint, 0);
            res = scan_markers_forward(lo_list, hi_list, si, ti);
        } else {
            const std::size_t sw =
                index_of(hi_list, old_r_hi, hi_list.empty() ? 0 : hi_list.size() - 1);
            const std::size_t tu =
                index_of(lo_list, restart_hint, lo_list.empty() ? 0 : lo_list.size() - 1);
            res = scan_markers_backward(lo_list, hi_list, tu, sw);
        }
        counters_.marker_advance_steps += res.steps;
        node.r_lo = res.r_lo;
        node.r_hi = res.r_hi;
        if (node.r_lo >= 0 && node.r_hi >= 0) refresh_merged_ends(v);
    }
    ascend(v);
}

// --- introspection ----------------------------------------------------------

std::vector<EnvelopeTree::ArcEntry> EnvelopeTree::root_owner_list() const {
    std::vector<ArcEntry> out;
    if (root_ < 0) return out;
    for (int s : list_of(nodes_[static_cast<std::size_t>(root_)].arcs_head)) {
        const SlotState& st = slots_[static_cast<std::size_t>(s)];
        out.push_back({st.site, st.a, st.b});
    }
    return out;
}

std::vector<Site> EnvelopeTree::live_sites() const {
    std::vector<Site> out;
    for (const SlotState& st : slots_)
        if (st.live) out.push_back(st.site);
    for (const auto& [id, s] : unreachable_) out.push_back(s);
    return out;
}

void EnvelopeTree::audit_walk(
    const std::function<void(int, const std::vector<int>&, const std::vector<ArcEntry>&, int,
                             int)>& callback) {
    if (root_ < 0 || nodes_[static_cast<std::size_t>(root_)].deleted) return;
    struct Rec {
        EnvelopeTree* self;
        void walk(int v, int depth,
                  const std::function<void(int, const std::vector<int>&,
                                           const std::vector<ArcEntry>&, int, int)>& cb) {
            Node& node = self->nodes_[static_cast<std::size_t>(v)];
            std::vector<ArcEntry> entries;
            for (int s : self->list_of(node.arcs_head)) {
                const SlotState& st = self->slots_[static_cast<std::size_t>(s)];
                entries.push_back({st.site, st.a, st.b});
            }
            std::vector<int> site_ids;
            for (int i = node.lo; i < node.hi; ++i)
                if (self->slots_[static_cast<std::size_t>(i)].live)
                    site_ids.push_back(self->slots_[static_cast<std::size_t>(i)].site.id);
            const int rl =
                node.r_lo >= 0 ? self->slots_[static_cast<std::size_t>(node.r_lo)].site.id : -1;
            const int rh =
                node.r_hi >= 0 ? self->slots_[static_cast<std::size_t>(node.r_hi)].site.id : -1;
            cb(depth, site_ids, entries, rl, rh);
            if (node.leaf_slot >= 0) return;
            self->descend(v);
            if (node.left >= 0) walk(node.left, depth + 1, cb);
            if (node.right >= 0) walk(node.right, depth + 1, cb);
            self->ascend(v);
        }
    };
    Rec rec{this};
    rec.walk(root_, 0, callback);
}

// ---------------------------------------------------------------------------
// GudreIndex
// ---------------------------------------------------------------------------

std::int64_t GudreIndex::LeafBucket::key(Point p) const {
    const auto cx = static_cast<std::int64_t>(std::floor(p.x / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y / cell));
    return (cx << 32) | (cy & 0xffffffff);
}

void GudreIndex::LeafBucket::insert(const Site& s) {
    grid[key(s.position)].push_back(s.id);
    sites.emplace(s.id, s);
}

bool GudreIndex::LeafBucket::erase(int site_id) {
    auto it = sites.find(site_id);
    if (it == sites.end()) return false;
    auto& cellv = grid[key(it->second.position)];
    cellv.erase(std::remove(cellv.begin(), cellv.end(), site_id), cellv.end());
    sites.erase(it);
    return true;
}

std::optional<Site> GudreIndex::LeafBucket::query(Point q, double radius) const {
    const auto cx = static_cast<std::int64_t>(std::floor(q.x / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(q.y / cell));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            const std::int64_t k = ((cx + dx) << 32) | ((cy + dy) & 0xffffffff);
            auto it = grid.find(k);
            if (it == grid.end()) continue;
            for (int id : it->second) {
                const Site& s = sites.at(id);
                if (distance(s.position, q) <= radius) return s;
            }
        }
    }
    return std::nullopt;
}

GudreIndex::GudreIndex(const GeodesicEngine& engine, const BpdTree& bpd, std::vector<Site> sites,
                       double radius)
    : engine_(&engine), bpd_(&bpd), radius_(radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
    std::unordered_map<std::int64_t, std::vector<Site>> pending;
    for (const Site& s : sites) {
        if (all_sites_.count(s.id)) throw std::invalid_argument("duplicate site id");
        all_sites_.emplace(s.id, s);
        ++live_count_;
        const int leaf = bpd.locate_leaf(s.position);
        site_leaf_[s.id] = leaf;
        auto& bucket = leaf_buckets_[leaf];
        bucket.cell = radius_;
        bucket.insert(s);
        ++stored_site_total_;
        int child = leaf;
        int v = bpd.node(leaf).parent;
        while (v >= 0) {
            const bool in_left = bpd.node(v).left == child;
            const std::int64_t tree_key = (static_cast<std::int64_t>(v) << 1) | (in_left ? 0 : 1);
            pending[tree_key].push_back(s);
            site_trees_[s.id].push_back(tree_key);
            ++stored_site_total_;
            child = v;
            v = bpd.node(v).parent;
        }
    }
    std::unordered_map<int, bool> node_nonempty;
    for (auto& [tree_key, tree_sites] : pending) {
        const int v = static_cast<int>(tree_key >> 1);
        const bool sites_in_left = (tree_key & 1) == 0;
        // Queries come from the sibling side, which the frame puts on the right.
        const Diagonal diag = bpd.diagonal(v, /*right_side_is_right_child=*/sites_in_left);
        trees_.emplace(tree_key, EnvelopeTree(engine, diag, std::move(tree_sites), radius_));
        node_nonempty[v] = true;
    }
    nonempty_nodes_ = leaf_buckets_.size() + node_nonempty.size();
}

std::optional<Site> GudreIndex::query(Point q) {
    const int leaf = bpd_->locate_leaf(q);
    if (auto it = leaf_buckets_.find(leaf); it != leaf_buckets_.end()) {
        if (auto hit = it->second.query(q, radius_)) return hit;
    }
    int child = leaf;
    int v = bpd_->node(leaf).parent;
    while (v >= 0) {
        const bool q_in_left = bpd_->node(v).left == child;
        // The tree holding the sibling side's sites serves queries on q's side.
        const std::int64_t tree_key = (static_cast<std::int64_t>(v) << 1) | (q_in_left ? 1 : 0);
        if (auto it = trees_.find(tree_key); it != trees_.end()) {
            if (auto hit = it->second.query(q)) return hit;
        }
        child = v;
        v = bpd_->node(v).parent;
    }
    return std::nullopt;
}

bool GudreIndex::is_live(int site_id) const { return all_sites_.count(site_id) > 0; }

bool GudreIndex::erase_if_present(int site_id) {
    if (!is_live(site_id)) return false;
    erase(site_id);
    return true;
}

void GudreIndex::erase(int site_id) {
    auto it = all_sites_.find(site_id);
    if (it == all_sites_.end())
        throw std::invalid_argument("unknown or already-deleted site");
    leaf_buckets_.at(site_leaf_.at(site_id)).erase(site_id);
    if (auto tk = site_trees_.find(site_id); tk != site_trees_.end())
        for (std::int64_t tree_key : tk->second) trees_.at(tree_key).erase(site_id);
    all_sites_.erase(it);
    --live_count_;
}

EnvelopeTree::Counters GudreIndex::tree_counters_total() const {
    EnvelopeTree::Counters total;
    for (const auto& [k, tree] : trees_) {
        total.marker_rescans += tree.counters().marker_rescans;
        total.marker_advance_steps += tree.counters().marker_advance_steps;
        total.boundary_fallbacks += tree.counters().boundary_fallbacks;
        total.handover_marches += tree.counters().handover_marches;
    }
    return total;
}

}  // namespace gudg
