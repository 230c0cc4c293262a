/**
 * Simple-polygon triangulation via monotone decomposition and the resulting
 * dual tree.
 *
 * The triangulator runs the classical two-phase algorithm: a top-down plane
 * sweep inserts diagonals that split the polygon into y-monotone faces
 * (start/end/split/merge/regular vertex classification with helper edges),
 * and each monotone face is then triangulated with the two-chain stack scan.
 * All vertex comparisons use the lexicographic (y, then x) order, so equal-y
 * vertices and horizontal edges are handled deterministically.
 *
 * The sweep status is kept in a plain vector scanned linearly per event;
 * this trades the textbook O(m log m) for O(m^2) worst case, which is well
 * within budget at the instance sizes this library targets and avoids the
 * comparator-staleness pitfalls of tree-based status structures.
 */
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gudg/polygon.hpp"

namespace gudg {

struct Triangulation {
    struct Tri {
        std::array<int, 3> v;    // CCW vertex indices into the polygon ring
        std::array<int, 3> nbr;  // nbr[k] = triangle across edge (v[k], v[k+1]); -1 at boundary
    };

    std::vector<Tri> tris;

    /// Internal (non-boundary) edges as vertex-index pairs, i < j by ring index.
    std::vector<std::pair<int, int>> diagonals;

    std::size_t size() const { return tris.size(); }
};

/**
 * Triangulate a valid SimplePolygon into m-2 triangles with adjacency.
 * The triangle list order and vertex order are deterministic functions of
 * the input ring. Throws GeometryError on inputs that defeat the sweep
 * (which, for a valid SimplePolygon, indicates a degeneracy the caller
 * should have removed).
 */
Triangulation triangulate(const SimplePolygon& polygon);

}  // namespace gudg
