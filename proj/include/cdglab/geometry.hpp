#pragma once

#include <array>
#include <cmath>

namespace cdglab {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Affine map x = v0 + J * xhat from the reference triangle (0,0),(1,0),(0,1).
struct ElementGeometry {
  Vec2 v0;
  double j[2][2];     // columns are edge vectors v1-v0, v2-v0
  double jinv[2][2];
  double det;         // = 2 * element area, positive for ccw vertices

  Vec2 to_physical(Vec2 ref) const {
    return {v0.x + j[0][0] * ref.x + j[0][1] * ref.y,
            v0.y + j[1][0] * ref.x + j[1][1] * ref.y};
  }
  Vec2 to_reference(Vec2 phys) const {
    const double dx = phys.x - v0.x, dy = phys.y - v0.y;
    return {jinv[0][0] * dx + jinv[0][1] * dy,
            jinv[1][0] * dx + jinv[1][1] * dy};
  }
  // physical gradient from reference gradient: grad = J^{-T} ref_grad
  Vec2 to_physical_gradient(Vec2 ref_grad) const {
    return {jinv[0][0] * ref_grad.x + jinv[1][0] * ref_grad.y,
            jinv[0][1] * ref_grad.x + jinv[1][1] * ref_grad.y};
  }
};

ElementGeometry make_element_geometry(Vec2 a, Vec2 b, Vec2 c);

}  // namespace cdglab
