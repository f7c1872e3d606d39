#pragma once

#include "cdglab/basis.hpp"
#include "cdglab/block_matrix.hpp"
#include "cdglab/mesh.hpp"
#include "cdglab/problem.hpp"

namespace cdglab {

// Symbolic coupling structure of a scheme, derived from the form's coupling
// graph (never by thresholding assembled values).  Returned as a block
// sparse matrix whose entries are 1.0 where the scheme can couple a pair of
// degrees of freedom and 0.0 elsewhere: diagonal blocks are full; the
// compact scheme couples all dofs of the supporting element to the face
// dofs of the other side; the full double-sum scheme adds face-to-face
// couplings between the non-support sides of faces sharing a support
// element; the two-sided lifting scheme couples in a cross shape (all rows
// to face columns and face rows to all columns) per neighbor.
BlockSparseMatrix structural_pattern(const Mesh& mesh, const NodalBasis& basis,
                                     const SwitchAssignment& sw, Scheme scheme);

}  // namespace cdglab
