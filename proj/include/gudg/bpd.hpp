/**
 * Balanced polygon decomposition (BPD) over the triangulation dual, plus the
 * canonical per-diagonal coordinate frame.
 *
 * The tree is built by repeatedly cutting a subpolygon along one of its
 * triangulation diagonals, chosen to minimize the larger side's triangle
 * count. Cutting a dual-tree edge whose heavier side is smallest bounds each
 * side by ceil(2T/3) + O(1) triangles, so the height is O(log m) and each
 * side of an internal node holds at most ceil(2m_v/3) + 2 vertices. Leaves
 * are exactly the triangles of the root triangulation.
 *
 * Diagonal-separated structures (range emptiness, Voronoi diagrams) work in
 * a frame where the diagonal is vertical with endpoint a on top and the
 * subpolygon of interest locally to the right (x >= 0). The frame is a pure
 * rotation + translation (never a reflection), so orientation predicates
 * agree between frame and original coordinates.
 */
#pragma once

#include <vector>

#include "gudg/geodesic.hpp"

namespace gudg {

/// Rigid motion mapping a diagonal onto the segment x=0, y in [0, len].
struct DiagonalFrame {
    Point origin;  // image of frame (0,0) in original coordinates (= lower endpoint)
    Point ex;      // unit normal of the diagonal pointing into the right side
    Point ey;      // rot90(ex); unit vector along the diagonal, lower -> upper

    Point to_frame(Point p) const {
        const Point v = p - origin;
        return {dot(v, ex), dot(v, ey)};
    }
    Point from_frame(Point q) const { return origin + q.x * ex + q.y * ey; }
};

/**
 * A triangulation diagonal in canonical position: a is the upper endpoint
 * and b the lower one under the frame, and the designated right side maps
 * to x >= 0.
 */
struct Diagonal {
    Point a;  // upper endpoint
    Point b;  // lower endpoint
    int va = -1;  // polygon vertex index of a
    int vb = -1;  // polygon vertex index of b
    DiagonalFrame frame;

    double length() const { return distance(a, b); }
    /// Point at parameter t in [0,1] measured from b (lower) to a (upper).
    Point point_at(double t) const { return b + t * (a - b); }

    /**
     * Canonicalize the diagonal between polygon vertices u and v;
     * right_hint must be a point strictly on the intended right side.
     */
    static Diagonal make(const SimplePolygon& poly, int u, int v, Point right_hint);
};

class BpdTree {
public:
    struct Node {
        int parent = -1;
        int left = -1;   // child ids; -1 on leaves
        int right = -1;
        int depth = 0;
        std::vector<int> tris;  // root-triangulation triangle ids in this subpolygon
        std::vector<int> ring;  // subpolygon boundary as polygon vertex ids (CCW)
        int diag_u = -1;  // splitting diagonal endpoints (internal nodes only)
        int diag_v = -1;

        bool is_leaf() const { return left < 0; }
        int triangle() const { return tris.front(); }
    };

    explicit BpdTree(const GeodesicEngine& engine);

    const GeodesicEngine& engine() const { return *engine_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int id) const { return nodes_[id]; }
    int root() const { return 0; }
    int height() const { return height_; }

    /// Leaf whose triangle contains p; containment ties go to the smallest
    /// triangle id. Throws OutsidePolygonError if p is outside the polygon.
    int locate_leaf(Point p) const;
    int leaf_of_triangle(int tri) const { return leaf_of_tri_[tri]; }

    /**
     * Canonical diagonal of internal node v. The right side of the frame is
     * the subpolygon of the child named by right_child ("left"/"right" child
     * slot of the node, not geometry).
     */
    Diagonal diagonal(int v, bool right_side_is_right_child) const;

private:
    void build(int node_id);

    const GeodesicEngine* engine_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<int> leaf_of_tri_;
    int height_ = 0;
};

/// z_p = argmin over z on d of geodesic distance d(p, z).
Point closest_point_on_diagonal(const GeodesicEngine& engine, const Diagonal& d, Point p);

}  // namespace gudg
