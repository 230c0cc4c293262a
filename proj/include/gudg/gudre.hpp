/**
 * Geodesic unit-disk range emptiness (GUDRE) with deletions.
 *
 * Given point sites inside a simple polygon, answer "is some live site within
 * geodesic distance `radius` of the query point?" and return a witness,
 * while supporting site deletions.
 *
 * Two layers:
 *
 *  - EnvelopeTree: sites on one side of a triangulation diagonal, queries on
 *    the other. The boundary of the union of the sites' geodesic disks,
 *    restricted to the query side, decomposes into arcs each owned by the
 *    nearest site; the owners, read along the boundary, appear in the same
 *    order as the sites' distances to the diagonal's lower endpoint. The
 *    tree stores sites in that order at its leaves and keeps, per internal
 *    node, the two split markers where the node's owner list is stitched
 *    from its children's lists, plus the arc endpoints needed to route a
 *    query by comparing it against one stored endpoint per level.
 *
 *  - GudreIndex: a balanced polygon decomposition whose internal nodes each
 *    carry two EnvelopeTrees (one per query side of the node's diagonal) and
 *    whose leaves (single triangles) carry a bucket grid, since within one
 *    triangle geodesic distance is Euclidean. A query checks its leaf bucket
 *    and one tree per ancestor; a deletion removes the site from its leaf
 *    bucket and from one tree per ancestor.
 *
 * All structural decisions (orders, arc endpoints, routing) use the site
 * coordinates exactly as supplied; callers wanting the documented
 * general-position guarantee apply apply_site_perturbation() once per
 * instance before building anything.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gudg/bpd.hpp"
#include "gudg/geodesic.hpp"

namespace gudg {

struct Site {
    Point position;
    int id = -1;
};

/// Deterministic general-position offset: site k moves by (k*eps, k^2*eps)
/// with eps = tol.eps_perturb(), the offset halved as needed so the site
/// stays strictly inside the polygon. Applied once per instance, never
/// stacked.
void apply_site_perturbation(std::vector<Site>& sites, const SimplePolygon& poly,
                             const Tolerances& tol);

/// Where an arc of the disk-union boundary ends.
enum class EndKind {
    on_diagonal,        // the owner's disk crosses the diagonal here
    on_boundary,        // hand-over to the neighbouring owner on the polygon boundary
    bisector_envelope,  // hand-over strictly inside the region: equidistant at `radius`
};

struct EnvelopeEnd {
    Point location;
    EndKind kind = EndKind::on_diagonal;
    Point z;             // closest diagonal point to location
    double z_t = 0.0;    // parameter of z on the diagonal (0 = lower endpoint)
    int boundary_edge = -1;  // polygon edge index when kind == on_boundary
};

/// Four-way comparison of two query-side points by where and how their
/// shortest paths leave the diagonal. "before" means p's path attaches
/// lower on the diagonal (or at the same point but more clockwise).
enum class ProjectionOrder {
    p_before_q,
    q_before_p,
    p_on_geodesic_dq,  // p lies on the shortest path from the diagonal to q
    q_on_geodesic_dp,
};

ProjectionOrder compare_by_diagonal_projection(const GeodesicEngine& engine, const Diagonal& d,
                                               Point p, Point q);
/// Same comparison with p's diagonal projection precomputed (one funnel saved).
ProjectionOrder compare_by_diagonal_projection(const GeodesicEngine& engine, const Diagonal& d,
                                               Point p, Point zp, double zp_t, Point q, Point zq,
                                               double zq_t);

/// Polygon vertex ids of the boundary chain of the diagonal's right side,
/// walked from the lower diagonal endpoint to the upper one.
std::vector<int> right_side_boundary_chain(const SimplePolygon& poly, const Diagonal& d);

/**
 * Deletion-only disk-emptiness structure for sites separated from the query
 * region by a polygon diagonal.
 */
class EnvelopeTree {
public:
    /// Owner-list entry: a site together with the two ends of its arc on the
    /// current union boundary (lower end first under the boundary order).
    struct ArcEntry {
        Site site;
        EnvelopeEnd a;  // lower end
        EnvelopeEnd b;  // upper end
    };

    struct Counters {
        std::int64_t marker_rescans = 0;        // deletions that recomputed split markers
        std::int64_t marker_advance_steps = 0;  // total scan advances across rescans
        std::int64_t boundary_fallbacks = 0;    // near-vertex routing fallbacks (logged)
        std::int64_t handover_marches = 0;      // hand-over points needing the march fallback
    };

    /**
     * Build over the given sites (all on the non-query side of d). Sites
     * whose disk cannot reach the diagonal are accepted but never reported;
     * they are tracked so erase() of them is a no-op.
     */
    EnvelopeTree(const GeodesicEngine& engine, Diagonal d, std::vector<Site> sites,
                 double radius = 1.0);

    /// Some live site within `radius` of q (q on the query side), else nullopt.
    std::optional<Site> query(Point q);

    /// Remove a live site. Throws std::invalid_argument if unknown/already removed.
    void erase(int site_id);
    /// Remove if present and live; returns whether anything happened.
    bool erase_if_present(int site_id);

    int live_count() const { return live_count_; }
    bool is_live(int site_id) const;
    double radius() const { return radius_; }
    const Diagonal& diagonal() const { return d_; }
    const Counters& counters() const { return counters_; }

    // --- introspection for audits (read-only views of the rest state) ---

    /// Owner list I stored at the root (rest state), in boundary order.
    std::vector<ArcEntry> root_owner_list() const;
    /// Walk the whole tree with descend/ascend, reporting every node's owner
    /// list and split markers to the callback: callback(depth, live site ids
    /// under the node in leaf order, owner_list, r_lo_id or -1, r_hi_id or
    /// -1). Restores the rest state.
    void audit_walk(
        const std::function<void(int, const std::vector<int>&, const std::vector<ArcEntry>&, int,
                                 int)>& callback);
    /// Sites in leaf order (the order used by the tree), live ones only.
    std::vector<Site> live_sites() const;

private:
    struct Node {
        int left = -1;
        int right = -1;
        int lo = 0, hi = 0;    // leaf-order site range [lo, hi)
        int leaf_slot = -1;    // leaves only
        bool deleted = false;
        int r_lo = -1;         // split marker in the left child's owner list (slot) or -1
        int r_hi = -1;         // split marker in the right child's owner list (slot) or -1
        EnvelopeEnd y1_b_rlo;  // upper end of r_lo's arc w.r.t. the left child's set
        EnvelopeEnd y1_a_rhi;  // lower end of r_hi's arc w.r.t. the right child's set
        EnvelopeEnd y2_b_rlo;  // upper end of r_lo's arc w.r.t. this node's set
        EnvelopeEnd y2_a_rhi;  // lower end of r_hi's arc w.r.t. this node's set
        int arcs_head = -1;
        int arcs_tail = -1;
    };

    struct SlotState {
        Site site;
        EnvelopeEnd a;  // current ends, relative to the set of whichever node's
        EnvelopeEnd b;  // owner list currently holds this slot
        int prev = -1;  // owner-list links (slot is in exactly one list)
        int next = -1;
        bool live = true;
    };

    int build(int lo, int hi);
    /// Compute split markers and merged-set arc ends of node v from its
    /// children's owner lists, then splice the merged list together.
    void stitch(int v);
    /// Recompute the merged-set ends of v's markers (both must exist).
    void refresh_merged_ends(int v);
    void descend(int v);
    void ascend(int v);
    std::optional<Site> query_node(int v, Point q, Point zq, double zq_t) const;
    void delete_rec(int v, int slot);
    std::optional<Site> subtree_linear_scan(int v, Point q) const;

    // Owner-list plumbing (slots linked through SlotState::prev/next).
    std::vector<int> list_of(int head) const;
    int list_last(int head) const;

    // Arc-end machinery.
    EnvelopeEnd diagonal_end(int slot, bool upper) const;
    EnvelopeEnd make_end(Point location, EndKind kind, int boundary_edge = -1) const;
    /// Shared arc end between the adjacent owners lo (below) and hi (above):
    /// the point where ownership hands over, on the polygon boundary or at
    /// distance `radius` from both.
    EnvelopeEnd envelope_handover(int lo_slot, int hi_slot) const;
    /// Lower (a) and upper (b) end of `slot`'s arc within an owner list where
    /// pred/succ are its neighbours (-1 if none).
    ArcEntry arc_entry(int slot, int pred_slot, int succ_slot) const;
    EnvelopeEnd upper_end_of(int slot, int succ_slot) const;
    EnvelopeEnd lower_end_of(int slot, int pred_slot) const;
    /// Memoized geodesic distance from a slot's site to chain vertex j.
    double chain_vertex_dist(int slot, std::size_t j) const;

    struct ScanResult {
        int r_lo = -1;  // slot or -1
        int r_hi = -1;
        int steps = 0;
    };
    ScanResult scan_markers_forward(const std::vector<int>& lo_list,
                                    const std::vector<int>& hi_list, std::size_t si,
                                    std::size_t ti) const;
    ScanResult scan_markers_backward(const std::vector<int>& lo_list,
                                     const std::vector<int>& hi_list, std::size_t ti,
                                     std::size_t si) const;

    double dist(int slot, Point p) const;

    const GeodesicEngine* engine_ = nullptr;
    Diagonal d_;
    double radius_ = 1.0;
    std::vector<Node> nodes_;
    std::vector<SlotState> slots_;
    std::vector<DiagonalDistanceTable> tables_;  // per-slot distance table along d
    std::vector<int> chain_;                     // right-side boundary chain (vertex ids)
    std::vector<Point> ring_;                    // chain points; closed by the diagonal

    /// Membership in the right-side subpolygon (the closed region bounded by
    /// the chain and the diagonal); points within eps of its boundary count
    /// as inside. Line-side tests against the diagonal are not a substitute:
    /// a nonconvex right side may cross the supporting line.
    bool in_query_side(Point p, double eps) const;
    mutable std::vector<std::vector<double>> chain_vertex_dist_;  // lazy, NaN = unset
    std::unordered_map<int, int> slot_of_id_;
    std::unordered_map<int, Site> unreachable_;  // sites whose disk misses the diagonal
    int root_ = -1;
    int live_count_ = 0;
    mutable Counters counters_;
};

/**
 * Polygon-wide deletion-only disk-emptiness index: balanced decomposition
 * with per-internal-node EnvelopeTree pairs and per-leaf bucket grids.
 */
class GudreIndex {
public:
    GudreIndex(const GeodesicEngine& engine, const BpdTree& bpd, std::vector<Site> sites,
               double radius = 1.0);

    std::optional<Site> query(Point q);
    void erase(int site_id);
    bool erase_if_present(int site_id);

    int live_count() const { return live_count_; }
    bool is_live(int site_id) const;
    double radius() const { return radius_; }

    /// Total stored site copies across all node structures (the decomposition
    /// stores each site once per ancestor level, so this is O(n log m)).
    std::size_t stored_site_total() const { return stored_site_total_; }
    /// Number of decomposition nodes that own a nonempty structure.
    std::size_t nonempty_node_count() const { return nonempty_nodes_; }
    EnvelopeTree::Counters tree_counters_total() const;

private:
    struct LeafBucket {
        double cell = 1.0;
        std::unordered_map<std::int64_t, std::vector<int>> grid;  // cell key -> site ids
        std::unordered_map<int, Site> sites;
        std::int64_t key(Point p) const;
        void insert(const Site& s);
        bool erase(int site_id);
        std::optional<Site> query(Point q, double radius) const;
    };

    const GeodesicEngine* engine_ = nullptr;
    const BpdTree* bpd_ = nullptr;
    double radius_ = 1.0;
    std::unordered_map<int, LeafBucket> leaf_buckets_;            // bpd leaf id -> bucket
    std::unordered_map<std::int64_t, EnvelopeTree> trees_;        // (node, side) -> tree
    std::unordered_map<int, std::vector<std::int64_t>> site_trees_;  // site id -> tree keys
    std::unordered_map<int, int> site_leaf_;                      // site id -> bpd leaf id
    std::unordered_map<int, Site> all_sites_;
    int live_count_ = 0;
    std::size_t stored_site_total_ = 0;
    std::size_t nonempty_nodes_ = 0;
};

}  // namespace gudg
