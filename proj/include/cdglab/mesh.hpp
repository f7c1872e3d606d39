#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cdglab/geometry.hpp"

namespace cdglab {

enum class BoundaryTag { Dirichlet, Neumann };

// Conforming interior face between elements "plus" and "minus"
// (plus = smaller element index).  normal points from plus to minus.
// The face parameter t in [0,1] maps to physical points
//   x_plus(t)  = a_plus  + t (b_plus  - a_plus)
//   x_minus(t) = a_minus + t (b_minus - a_minus)
// where the minus endpoints live on the minus element's own copy of the face
// (identical for ordinary faces, translated across periodic seams).
struct InteriorFace {
  int elem_plus = -1, elem_minus = -1;
  int local_face_plus = -1, local_face_minus = -1;
  Vec2 normal;  // unit, outward from elem_plus
  double length = 0.0;
  Vec2 a_plus, b_plus;
  Vec2 a_minus, b_minus;

  Vec2 x_plus(double t) const { return a_plus + t * (b_plus - a_plus); }
  Vec2 x_minus(double t) const { return a_minus + t * (b_minus - a_minus); }
};

struct BoundaryFace {
  int elem = -1;
  int local_face = -1;
  Vec2 normal;  // unit outward
  double length = 0.0;
  Vec2 a, b;
  BoundaryTag tag = BoundaryTag::Dirichlet;

  Vec2 at(double t) const { return a + t * (b - a); }
};

// Reference into the face arrays, from the element side.
struct FaceRef {
  int index = -1;
  bool interior = false;
  bool plus_side = false;
};

struct Mesh {
  int n = 0;  // structured resolution (0 for ad-hoc meshes)
  bool periodic = false;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> elements;  // ccw vertex triples
  std::vector<InteriorFace> interior_faces;
  std::vector<BoundaryFace> boundary_faces;
  std::vector<std::array<FaceRef, 3>> element_faces;  // by local face

  int num_elements() const { return static_cast<int>(elements.size()); }
  ElementGeometry element_geometry(int e) const;
};

using BoundaryTagger = std::function<BoundaryTag(Vec2 midpoint)>;

// n x n grid of squares on the unit square, each split along the
// lower-left -> upper-right diagonal; 2n^2 elements indexed row-major with
// the two triangles of a square consecutive.  h = 1/n.
Mesh build_structured_mesh(int n, bool periodic,
                           const BoundaryTagger& tagger = {});

// Arbitrary conforming (non-periodic) triangle mesh from ccw vertex triples.
Mesh build_triangle_mesh(std::vector<Vec2> vertices,
                         std::vector<std::array<int, 3>> elements,
                         const BoundaryTagger& tagger = {});

enum class SwitchStrategy { Consistent, Natural };

// One switch value per interior face for the plus element; the minus element
// gets the complement.  Every element's switches over its interior faces sum
// to at most 2 (checked for the consistent strategy at construction).
struct SwitchAssignment {
  SwitchStrategy strategy = SwitchStrategy::Consistent;
  std::vector<unsigned char> s_plus;  // size = interior_faces.size()
};

SwitchAssignment assign_switches(const Mesh& mesh, SwitchStrategy strategy);

// C12 = (s_plus - s_minus)/2 * normal = +-normal/2 on interior face f.
Vec2 c12_vector(const Mesh& mesh, const SwitchAssignment& sw, int face);

// Element on which the face-wise CDG flux correction for interior face f is
// supported: the side whose switch is one.
int cdg_face_sigma_support(const Mesh& mesh, const SwitchAssignment& sw,
                           int face);

}  // namespace cdglab
