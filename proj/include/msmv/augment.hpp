#pragma once

#include <vector>

#include "msmv/grid.hpp"
#include "msmv/plane.hpp"

namespace msmv::augment {

/// Exact index permutation of a square grid. With (r, c) indexing and n = side:
///   Rot90  : out(r, c) = in(n-1-c, r)   (counter-clockwise in y-up coordinates)
///   Rot180 : out(r, c) = in(n-1-r, n-1-c)
///   Rot270 : out(r, c) = in(c, n-1-r)
///   FlipH  : out(r, c) = in(r, n-1-c)
///   FlipV  : out(r, c) = in(n-1-r, c)
/// Throws NonSquareInput.
Grid apply_augment(const Grid& grid, AugmentOp op);

/// Transforms the pixels and records op in plane.applied (composed with any earlier op is not
/// tracked; applying to an already-augmented plane is a usage error). View and scale are kept.
ImagePlane apply_augment(const ImagePlane& plane, AugmentOp op);

/// Same op on every present plane of both views.
PreparedViews apply_augment(const PreparedViews& views, AugmentOp op);

}  // namespace msmv::augment
