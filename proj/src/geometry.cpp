#include "cdglab/geometry.hpp"

#include <stdexcept>

namespace cdglab {

ElementGeometry make_element_geometry(Vec2 a, Vec2 b, Vec2 c) {
  ElementGeometry g;
  g.v0 = a;
  g.j[0][0] = b.x - a.x;
  g.j[1][0] = b.y - a.y;
  g.j[0][1] = c.x - a.x;
  g.j[1][1] = c.y - a.y;
  g.det = g.j[0][0] * g.j[1][1] - g.j[0][1] * g.j[1][0];
  if (!(g.det > 1e-300))
    throw std::invalid_argument("degenerate or negatively oriented element");
  const double inv = 1.0 / g.det;
  g.jinv[0][0] = g.j[1][1] * inv;
  g.jinv[0][1] = -g.j[0][1] * inv;
  g.jinv[1][0] = -g.j[1][0] * inv;
  g.jinv[1][1] = g.j[0][0] * inv;
  return g;
}

}  // namespace cdglab
