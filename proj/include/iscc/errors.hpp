#pragma once
// Exception taxonomy shared across the simulator. Each class maps to one
// failure category surfaced by the operation contracts (parsing, validation,
// geometry, resource conflicts, ...). All carry a human-readable message.

#include <stdexcept>
#include <string>

namespace iscc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config text does not match the documented schema.
struct ParseError : Error {
  using Error::Error;
};

// Schema-valid input that violates a domain invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Unknown id (entity, receipt, contract).
struct LookupError : Error {
  using Error::Error;
};

// Degenerate or out-of-domain geometry (coincident points, sensing outside
// the security domain, sector mismatch).
struct GeometryError : Error {
  using Error::Error;
};

// Passive sensing attempted outside the angular tolerance of the
// communication beam.
struct RegionError : Error {
  using Error::Error;
};

// Receipt or grid not owned by the acting entity.
struct OwnershipError : Error {
  using Error::Error;
};

// Allocation touched at least one occupied cell. Message lists the cells.
struct ConflictError : Error {
  using Error::Error;
};

// Cell index outside the grid.
struct BoundsError : Error {
  using Error::Error;
};

// Missing prerequisite allocation (e.g. passive sensing with no live
// communication link).
struct DependencyError : Error {
  using Error::Error;
};

// Policy decision referenced an invalid target / level / template index.
struct DecisionError : Error {
  using Error::Error;
};

// Action distribution requested with every candidate masked out.
struct FeasibilityError : Error {
  using Error::Error;
};

// Tensor / feature dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Backward pass invoked with a cache that does not match params + graph.
struct ConsistencyError : Error {
  using Error::Error;
};

// Instance exceeds a guard cap (exhaustive search).
struct SizeError : Error {
  using Error::Error;
};

}  // namespace iscc
