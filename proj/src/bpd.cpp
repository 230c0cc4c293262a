#include "gudg/bpd.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "gudg/errors.hpp"

namespace gudg {

Diagonal Diagonal::make(const SimplePolygon& poly, int u, int v, Point right_hint) {
    const Point pu = poly[u];
    const Point pv = poly[v];
    const Point dir = normalized(pv - pu);
    Point n{-dir.y, dir.x};
    if (dot(right_hint - pu, n) < 0.0) n = -1.0 * n;
    Diagonal d;
    d.frame.ex = n;
    d.frame.ey = {-n.y, n.x};  // rot90 keeps the frame a proper rotation
    const bool u_upper = dot(pu, d.frame.ey) >= dot(pv, d.frame.ey);
    d.va = u_upper ? u : v;
    d.vb = u_upper ? v : u;
    d.a = poly[d.va];
    d.b = poly[d.vb];
    d.frame.origin = d.b;
    return d;
}

BpdTree::BpdTree(const GeodesicEngine& engine) : engine_(&engine) {
    const auto& tri = engine.triangulation();
    const int n_tris = static_cast<int>(tri.tris.size());
    const int m = static_cast<int>(engine.polygon().size());
    Node root;
    root.tris.resize(static_cast<std::size_t>(n_tris));
    for (int t = 0; t < n_tris; ++t) root.tris[static_cast<std::size_t>(t)] = t;
    root.ring.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) root.ring[static_cast<std::size_t>(i)] = i;
    nodes_.push_back(std::move(root));
    build(0);
    leaf_of_tri_.assign(static_cast<std::size_t>(n_tris), -1);
    for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
        const Node& nd = nodes_[static_cast<std::size_t>(id)];
        height_ = std::max(height_, nd.depth);
        if (nd.is_leaf()) leaf_of_tri_[static_cast<std::size_t>(nd.triangle())] = id;
    }
}

void BpdTree::build(int node_id) {
    const std::vector<int> tris = nodes_[static_cast<std::size_t>(node_id)].tris;
    if (tris.size() <= 1) return;
    const auto& tri = engine_->triangulation();

    // Dual adjacency restricted to this subpolygon's triangles.
    std::set<int> in_set(tris.begin(), tris.end());

    // Root the dual subtree at tris[0]; subtree sizes give every candidate
    // cut's two side counts in one pass.
    std::map<int, int> parent;  // triangle -> dual parent within the set
    std::vector<int> order;
    order.reserve(tris.size());
    parent[tris[0]] = -1;
    order.push_back(tris[0]);
    for (std::size_t h = 0; h < order.size(); ++h) {
        for (int nb : tri.tris[static_cast<std::size_t>(order[h])].nbr) {
            if (nb >= 0 && in_set.count(nb) && !parent.count(nb)) {
                parent[nb] = order[h];
                order.push_back(nb);
            }
        }
    }
    std::map<int, int> sz;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        sz[*it] += 1;
        if (parent[*it] >= 0) sz[parent[*it]] += sz[*it];
    }

    const int total = static_cast<int>(tris.size());
    const auto shared_edge = [&](int t1, int t2) {
        const auto& a = tri.tris[static_cast<std::size_t>(t1)];
        for (int k = 0; k < 3; ++k) {
            if (a.nbr[k] == t2) {
                return std::pair<int, int>{std::min(a.v[k], a.v[(k + 1) % 3]),
                                           std::max(a.v[k], a.v[(k + 1) % 3])};
            }
        }
        throw GeometryError("bpd: triangles are not adjacent");
    };

    int best_tri = -1;
    int best_cost = std::numeric_limits<int>::max();
    std::pair<int, int> best_diag{-1, -1};
    for (std::size_t h = 1; h < order.size(); ++h) {
        const int t = order[h];
        const int cost = std::max(sz[t], total - sz[t]);
        const auto diag = shared_edge(t, parent[t]);
        if (cost < best_cost || (cost == best_cost && diag < best_diag)) {
            best_cost = cost;
            best_tri = t;
            best_diag = diag;
        }
    }

    // Component on best_tri's side of the cut.
    std::set<int> comp_a;
    std::vector<int> fifo{best_tri};
    comp_a.insert(best_tri);
    for (std::size_t h = 0; h < fifo.size(); ++h) {
        for (int nb : tri.tris[static_cast<std::size_t>(fifo[h])].nbr) {
            // Blocking the parent triangle blocks the whole far side: the
            // dual is a tree, so every path to it crosses the cut edge.
            if (nb >= 0 && nb != parent[best_tri] && in_set.count(nb) && !comp_a.count(nb)) {
                comp_a.insert(nb);
                fifo.push_back(nb);
            }
        }
    }

    // Split the ring at the diagonal; the child listed first starts at the
    // smaller diagonal endpoint id.
    const auto& ring = nodes_[static_cast<std::size_t>(node_id)].ring;
    const auto ring_pos = [&](int vid) {
        return static_cast<int>(std::find(ring.begin(), ring.end(), vid) - ring.begin());
    };
    const int pu = ring_pos(best_diag.first);
    const int pv = ring_pos(best_diag.second);
    const int rn = static_cast<int>(ring.size());
    const auto ring_slice = [&](int from, int to) {
        std::vector<int> out;
        for (int i = from; ; i = (i + 1) % rn) {
            out.push_back(ring[static_cast<std::size_t>(i)]);
            if (i == to) break;
        }
        return out;
    };
    std::vector<int> ring1 = ring_slice(pu, pv);
    std::vector<int> ring2 = ring_slice(pv, pu);

    // Match triangle components to rings via the apex vertex of best_tri
    // (the vertex not on the diagonal).
    const auto& bt = tri.tris[static_cast<std::size_t>(best_tri)];
    int apex = bt.v[0];
    for (int k = 0; k < 3; ++k) {
        if (bt.v[k] != best_diag.first && bt.v[k] != best_diag.second) apex = bt.v[k];
    }
    const bool a_in_ring1 =
        std::find(ring1.begin(), ring1.end(), apex) != ring1.end();

    Node child1, child2;
    child1.parent = child2.parent = node_id;
    child1.depth = child2.depth = nodes_[static_cast<std::size_t>(node_id)].depth + 1;
    child1.ring = std::move(ring1);
    child2.ring = std::move(ring2);
    for (int t : tris) {
        const bool in_a = comp_a.count(t) > 0;
        if (in_a == a_in_ring1) {
            child1.tris.push_back(t);
        } else {
            child2.tris.push_back(t);
        }
    }
    if (child1.tris.size() + 2 != child1.ring.size() ||
        child2.tris.size() + 2 != child2.ring.size()) {
        throw GeometryError("bpd: split bookkeeping mismatch");
    }

    const int id1 = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(child1));
    const int id2 = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(child2));
    Node& me = nodes_[static_cast<std::size_t>(node_id)];
    me.left = id1;
    me.right = id2;
    me.diag_u = best_diag.first;
    me.diag_v = best_diag.second;
    build(id1);
    build(id2);
}

int BpdTree::locate_leaf(Point p) const {
    const int t = engine_->locate_triangle(p);  // smallest containing id
    return leaf_of_tri_[static_cast<std::size_t>(t)];
}

Diagonal BpdTree::diagonal(int v, bool right_side_is_right_child) const {
    const Node& nd = nodes_[static_cast<std::size_t>(v)];
    if (nd.is_leaf()) throw GeometryError("bpd: leaf node has no diagonal");
    const Node& side =
        nodes_[static_cast<std::size_t>(right_side_is_right_child ? nd.right : nd.left)];
    // Hint: centroid of a triangle of the designated right side that touches
    // the diagonal (the first one adjacent works; any interior point of the
    // side's subpolygon not on d does).
    const auto& tri = engine_->triangulation();
    const auto& poly = engine_->polygon();
    Point hint{0.0, 0.0};
    bool found = false;
    for (int t : side.tris) {
        const auto& tr = tri.tris[static_cast<std::size_t>(t)];
        int on_diag = 0;
        for (int k = 0; k < 3; ++k) {
            if (tr.v[k] == nd.diag_u || tr.v[k] == nd.diag_v) ++on_diag;
        }
        if (on_diag == 2) {
            hint = (poly[tr.v[0]] + poly[tr.v[1]] + poly[tr.v[2]]) * (1.0 / 3.0);
            found = true;
            break;
        }
    }
    if (!found) throw GeometryError("bpd: no triangle adjacent to diagonal");
    return Diagonal::make(poly, nd.diag_u, nd.diag_v, hint);
}

Point closest_point_on_diagonal(const GeodesicEngine& engine, const Diagonal& d, Point p) {
    // Table parameter runs a -> b; Diagonal::point_at runs b -> a. Work in
    // table parameters here and return a concrete point, so no confusion
    // leaks out.
    const DiagonalDistanceTable table(engine, d.a, d.b, p);
    return table.point_at(table.min_t());
}

}  // namespace gudg
