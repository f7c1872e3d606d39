#pragma once

#include <vector>

#include "cdglab/geometry.hpp"

namespace cdglab {

// Quadrature on the reference triangle (0,0),(1,0),(0,1).
// Weights are positive and sum to the reference area 1/2.
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int exactness = 0;  // integrates all polynomials of total degree <= exactness
};

// Quadrature on the reference face parameter interval [0,1].
// Weights are positive and sum to the interval length 1.
struct FaceRule {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness = 0;
};

// Conical-product Gauss rules: exact to at least min_degree by construction.
TriangleRule triangle_quadrature(int min_degree);
FaceRule face_quadrature(int min_degree);

// Gauss-Legendre nodes/weights on [-1,1] (used by the rule builders; exposed
// for tests).
void gauss_legendre(int q, std::vector<double>& x, std::vector<double>& w);

}  // namespace cdglab
