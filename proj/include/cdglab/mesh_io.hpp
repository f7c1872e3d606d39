#pragma once

#include <iosfwd>
#include <string>

#include "cdglab/mesh.hpp"

namespace cdglab {

// JSON layout: top-level object with "n", "periodic", and four arrays —
// "vertices" ([x, y] pairs), "elements" (ccw vertex-index triples),
// "interior_faces" (elem_plus, elem_minus, local_face_plus,
// local_face_minus, normal_plus), "boundary_faces" (elem, local_face,
// normal, tag "dirichlet"|"neumann").
std::string mesh_to_json(const Mesh& mesh);
void write_mesh_json(std::ostream& out, const Mesh& mesh);

// Rebuilds a mesh from the JSON layout above.  Periodic meshes are rebuilt
// from their grid parameter; non-periodic ones from vertices, elements, and
// the exported boundary tags (connectivity is re-derived and re-validated).
// Throws std::invalid_argument on malformed input.
Mesh mesh_from_json(const std::string& text);
Mesh read_mesh_json(std::istream& in);

}  // namespace cdglab
