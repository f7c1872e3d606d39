#pragma once

#include "cdglab/geometry.hpp"

namespace cdglab {
namespace manufactured {

// Smooth oscillatory test solution on the unit square:
//   u(x,y) = exp(0.1 sin(5.1 x - 6.2 y) + 0.3 cos(4.3 x + 3.4 y))
// with f = -div(grad u), so that -Laplace(u) = f with kappa = 1.
double eval_u(double x, double y);
Vec2 eval_grad_u(double x, double y);
double eval_f(double x, double y);

}  // namespace manufactured
}  // namespace cdglab
