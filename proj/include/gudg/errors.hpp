/**
 * Exception taxonomy. The CLI maps these onto its exit codes: parse failures
 * (2), geometry validation failures (3), and oracle mismatches (4).
 */
#pragma once

#include <stdexcept>
#include <string>

namespace gudg {

/// Malformed input files / JSON.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid geometry: self-intersecting rings, out-of-domain points, ...
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutsidePolygonError : GeometryError {
    using GeometryError::GeometryError;
};

struct DegenerateQueryError : GeometryError {
    using GeometryError::GeometryError;
};

/// A --oracle-check run detected a disagreement with the reference answer.
struct OracleMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gudg
