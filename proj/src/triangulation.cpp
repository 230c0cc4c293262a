#include "gudg/triangulation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "gudg/errors.hpp"

namespace gudg {

namespace {

/// Lexicographic sweep order: a strictly below b (y first, then x reversed,
/// which emulates an infinitesimal clockwise shear and removes horizontal
/// ties from the analysis).
bool below(Point a, Point b) {
    if (a.y != b.y) return a.y < b.y;
    return a.x > b.x;
}

enum class VClass : std::uint8_t { Start, End, Split, Merge, Regular };

struct StatusEdge {
    int edge;    // edge index e: directed polygon edge v[e] -> v[e+1]
    int helper;  // vertex index
};

/// x-coordinate of edge e at the sweep position, for left-of tests.
double edge_x_at(const std::vector<Point>& v, int e, Point sweep) {
    const Point a = v[e];
    const Point b = v[(e + 1) % v.size()];
    if (a.y == b.y) {
        return std::clamp(sweep.x, std::min(a.x, b.x), std::max(a.x, b.x));
    }
    const double t = (sweep.y - a.y) / (b.y - a.y);
    return a.x + std::clamp(t, 0.0, 1.0) * (b.x - a.x);
}

class MonotoneDecomposer {
public:
    explicit MonotoneDecomposer(const std::vector<Point>& v) : v_(v), m_(static_cast<int>(v.size())) {}

    /// Runs the sweep; returns the inserted diagonals as vertex-index pairs.
    std::vector<std::pair<int, int>> run() {
        classify();
        std::vector<int> order(m_);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (v_[a] == v_[b]) return a < b;
            return below(v_[b], v_[a]);  // topmost first
        });
        for (int idx : order) handle(idx);
        return std::move(diagonals_);
    }

private:
    int prev(int i) const { return (i + m_ - 1) % m_; }
    int next(int i) const { return (i + 1) % m_; }

    void classify() {
        cls_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            const Point p = v_[prev(i)];
            const Point c = v_[i];
            const Point n = v_[next(i)];
            const bool prev_below = below(p, c);
            const bool next_below = below(n, c);
            const bool convex = cross(p, c, n) > 0.0;
            if (prev_below && next_below) {
                cls_[i] = convex ? VClass::Start : VClass::Split;
            } else if (!prev_below && !next_below) {
                cls_[i] = convex ? VClass::End : VClass::Merge;
            } else {
                cls_[i] = VClass::Regular;
            }
        }
    }

    void insert_status(int edge, int helper) { status_.push_back({edge, helper}); }

    void erase_status(int edge) {
        for (std::size_t k = 0; k < status_.size(); ++k) {
            if (status_[k].edge == edge) {
                status_.erase(status_.begin() + static_cast<std::ptrdiff_t>(k));
                return;
            }
        }
        throw GeometryError("triangulate: sweep status lost edge " + std::to_string(edge));
    }

    /// Index into status_ of the edge directly left of the sweep point.
    std::size_t left_of(Point sweep) {
        double best_x = -std::numeric_limits<double>::infinity();
        std::size_t best = status_.size();
        for (std::size_t k = 0; k < status_.size(); ++k) {
            const double x = edge_x_at(v_, status_[k].edge, sweep);
            if (x <= sweep.x && x >= best_x) {
                best_x = x;
                best = k;
            }
        }
        if (best == status_.size()) {
            throw GeometryError("triangulate: no status edge left of sweep vertex");
        }
        return best;
    }

    void add_diagonal(int a, int b) {
        if (a == b || next(a) == b || next(b) == a) return;  // degenerate, never expected
        diagonals_.emplace_back(std::min(a, b), std::max(a, b));
    }

    void handle(int i) {
        switch (cls_[i]) {
            case VClass::Start:
                insert_status(i, i);
                break;
            case VClass::End: {
                fix_helper(prev(i), i);
                erase_status(prev(i));
                break;
            }
            case VClass::Split: {
                const std::size_t j = left_of(v_[i]);
                add_diagonal(i, status_[j].helper);
                status_[j].helper = i;
                insert_status(i, i);
                break;
            }
            case VClass::Merge: {
                fix_helper(prev(i), i);
                erase_status(prev(i));
                const std::size_t j = left_of(v_[i]);
                if (cls_[status_[j].helper] == VClass::Merge) {
                    add_diagonal(i, status_[j].helper);
                }
                status_[j].helper = i;
                break;
            }
            case VClass::Regular: {
                const bool interior_right = below(v_[i], v_[prev(i)]);  // descending chain
                if (interior_right) {
                    fix_helper(prev(i), i);
                    erase_status(prev(i));
                    insert_status(i, i);
                } else {
                    const std::size_t j = left_of(v_[i]);
                    if (cls_[status_[j].helper] == VClass::Merge) {
                        add_diagonal(i, status_[j].helper);
                    }
                    status_[j].helper = i;
                }
                break;
            }
        }
    }

    /// End-of-edge bookkeeping: connect to a pending merge helper if any.
    void fix_helper(int edge, int i) {
        for (const StatusEdge& se : status_) {
            if (se.edge == edge) {
                if (cls_[se.helper] == VClass::Merge) add_diagonal(i, se.helper);
                return;
            }
        }
        throw GeometryError("triangulate: edge missing at its lower endpoint");
    }

    const std::vector<Point>& v_;
    int m_;
    std::vector<VClass> cls_;
    std::vector<StatusEdge> status_;
    std::vector<std::pair<int, int>> diagonals_;
};

/// Faces of the polygon subdivided by non-crossing diagonals, via the
/// boundary-order rotation system (angular order around a vertex equals
/// ring order of the opposite endpoints for chords of a simple polygon).
std::vector<std::vector<int>> extract_faces(int m,
                                            const std::vector<std::pair<int, int>>& diagonals) {
    std::vector<std::vector<int>> adj(m);
    for (int i = 0; i < m; ++i) {
        adj[i].push_back((i + 1) % m);
        adj[i].push_back((i + m - 1) % m);
    }
    for (auto [a, b] : diagonals) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (int i = 0; i < m; ++i) {
        std::sort(adj[i].begin(), adj[i].end(), [&](int p, int q) {
            return (p - i - 1 + m) % m < (q - i - 1 + m) % m;
        });
        adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
    }
    // Walk faces: next directed edge after (u -> v) is (v -> w) with w the
    // rotation predecessor of u at v; interior faces come out CCW.
    std::map<std::pair<int, int>, bool> used;
    std::vector<std::vector<int>> faces;
    for (int u = 0; u < m; ++u) {
        for (int v : adj[u]) {
            if (used[{u, v}]) continue;
            std::vector<int> face;
            int cu = u, cv = v;
            while (!used[{cu, cv}]) {
                used[{cu, cv}] = true;
                face.push_back(cu);
                const auto& rot = adj[cv];
                const auto it = std::find(rot.begin(), rot.end(), cu);
                const std::size_t idx = static_cast<std::size_t>(it - rot.begin());
                const int w = rot[(idx + rot.size() - 1) % rot.size()];
                cu = cv;
                cv = w;
            }
            faces.push_back(std::move(face));
        }
    }
    return faces;
}

double face_signed_area(const std::vector<Point>& v, const std::vector<int>& face) {
    double s = 0.0;
    for (std::size_t k = 0; k < face.size(); ++k) {
        s += cross(v[face[k]], v[face[(k + 1) % face.size()]]);
    }
    return 0.5 * s;
}

/// Stack triangulation of one y-monotone face (vertex indices, CCW).
void triangulate_monotone(const std::vector<Point>& v, const std::vector<int>& face,
                          std::vector<Triangulation::Tri>& out) {
    const std::size_t k = face.size();
    if (k < 3) throw GeometryError("triangulate: degenerate face");
    if (k == 3) {
        out.push_back({{face[0], face[1], face[2]}, {-1, -1, -1}});
        return;
    }
    // Top and bottom in sweep order.
    std::size_t top = 0, bot = 0;
    for (std::size_t i = 1; i < k; ++i) {
        if (below(v[face[top]], v[face[i]])) top = i;
        if (below(v[face[i]], v[face[bot]])) bot = i;
    }
    enum Side : std::uint8_t { kLeft, kRight };
    // Left chain: CCW forward walk top -> bottom (interior lies east of a
    // descending CCW chain). Right chain: the rest.
    std::vector<Side> side(k, kRight);
    for (std::size_t i = top; i != bot; i = (i + 1) % k) side[i] = kLeft;
    side[bot] = kRight;

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[face[a]] == v[face[b]]) return a < b;
        return below(v[face[b]], v[face[a]]);  // topmost first
    });

    const auto emit = [&](int a, int b, int c) {
        if (cross(v[a], v[b], v[c]) < 0.0) std::swap(b, c);
        out.push_back({{a, b, c}, {-1, -1, -1}});
    };

    std::vector<std::size_t> stack = {order[0], order[1]};
    for (std::size_t j = 2; j < k; ++j) {
        const std::size_t uj = order[j];
        const bool last = (j + 1 == k);
        if (last || side[uj] != side[stack.back()]) {
            while (stack.size() >= 2) {
                const std::size_t v1 = stack.back();
                stack.pop_back();
                emit(face[uj], face[v1], face[stack.back()]);
            }
            const std::size_t old_top = order[j - 1];
            stack.clear();
            stack.push_back(old_top);
            stack.push_back(uj);
        } else {
            std::size_t v1 = stack.back();
            stack.pop_back();
            while (!stack.empty()) {
                const std::size_t v2 = stack.back();
                const double turn = cross(v[face[uj]], v[face[v1]], v[face[v2]]);
                const bool can_cut = (side[uj] == kLeft) ? (turn < 0.0) : (turn > 0.0);
                if (!can_cut) break;
                emit(face[uj], face[v1], face[v2]);
                v1 = v2;
                stack.pop_back();
            }
            stack.push_back(v1);
            stack.push_back(uj);
        }
    }
}

}  // namespace

Triangulation triangulate(const SimplePolygon& polygon) {
    const auto& v = polygon.vertices();
    const int m = static_cast<int>(v.size());
    Triangulation tr;
    if (m == 3) {
        tr.tris.push_back({{0, 1, 2}, {-1, -1, -1}});
        return tr;
    }

    MonotoneDecomposer decomposer(v);
    auto diagonals = decomposer.run();
    std::sort(diagonals.begin(), diagonals.end());
    diagonals.erase(std::unique(diagonals.begin(), diagonals.end()), diagonals.end());
    const auto faces = extract_faces(m, diagonals);

    tr.tris.reserve(static_cast<std::size_t>(m - 2));
    for (const auto& face : faces) {
        if (face_signed_area(v, face) <= 0.0) continue;  // outer face
        triangulate_monotone(v, face, tr.tris);
    }
    if (static_cast<int>(tr.tris.size()) != m - 2) {
        throw GeometryError("triangulate: produced " + std::to_string(tr.tris.size()) +
                            " triangles for an m=" + std::to_string(m) + " polygon");
    }

    // Adjacency: undirected edge -> incident triangles.
    std::map<std::pair<int, int>, std::pair<int, int>> edge_tris;  // -> (tri, slot)
    for (int t = 0; t < static_cast<int>(tr.tris.size()); ++t) {
        for (int k = 0; k < 3; ++k) {
            const int a = tr.tris[t].v[k];
            const int b = tr.tris[t].v[(k + 1) % 3];
            const auto key = std::minmax(a, b);
            const auto it = edge_tris.find({key.first, key.second});
            if (it == edge_tris.end()) {
                edge_tris[{key.first, key.second}] = {t, k};
            } else {
                const auto [other, slot] = it->second;
                if (tr.tris[t].nbr[k] != -1 || tr.tris[other].nbr[slot] != -1) {
                    throw GeometryError("triangulate: edge shared by 3+ triangles");
                }
                tr.tris[t].nbr[k] = other;
                tr.tris[other].nbr[slot] = t;
                tr.diagonals.emplace_back(key.first, key.second);
            }
        }
    }
    // A triangulated simple polygon has exactly m-3 internal edges, and the
    // dual graph (connected, T-1 edges) is a tree.
    if (static_cast<int>(tr.diagonals.size()) != m - 3) {
        throw GeometryError("triangulate: expected m-3 diagonals, got " +
                            std::to_string(tr.diagonals.size()));
    }
    std::sort(tr.diagonals.begin(), tr.diagonals.end());
    std::vector<int> seen(tr.tris.size(), 0);
    std::vector<int> bfs = {0};
    seen[0] = 1;
    for (std::size_t h = 0; h < bfs.size(); ++h) {
        for (int nb : tr.tris[bfs[h]].nbr) {
            if (nb >= 0 && !seen[nb]) {
                seen[nb] = 1;
                bfs.push_back(nb);
            }
        }
    }
    if (bfs.size() != tr.tris.size()) {
        throw GeometryError("triangulate: dual graph is disconnected");
    }
    return tr;
}

}  // namespace gudg
