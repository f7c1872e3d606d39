#include "cdglab/manufactured.hpp"

#include <cmath>

namespace cdglab {
namespace manufactured {

namespace {
constexpr double kAlpha = 0.1, kBeta = 0.3;
constexpr double kA = 5.1, kB = -6.2, kC = 4.3, kD = 3.4;
}  // namespace

// u = exp(phi), phi = alpha sin(a x + b y) + beta cos(c x + d y)
double eval_u(double x, double y) {
  const double phi =
      kAlpha * std::sin(kA * x + kB * y) + kBeta * std::cos(kC * x + kD * y);
  return std::exp(phi);
}

Vec2 eval_grad_u(double x, double y) {
  const double s1 = kA * x + kB * y, s2 = kC * x + kD * y;
  const double u = eval_u(x, y);
  const double px = kAlpha * kA * std::cos(s1) - kBeta * kC * std::sin(s2);
  const double py = kAlpha * kB * std::cos(s1) - kBeta * kD * std::sin(s2);
  return {u * px, u * py};
}

// f = -Laplace(u) = -u (|grad phi|^2 + Laplace phi)
double eval_f(double x, double y) {
  const double s1 = kA * x + kB * y, s2 = kC * x + kD * y;
  const double u = eval_u(x, y);
  const double px = kAlpha * kA * std::cos(s1) - kBeta * kC * std::sin(s2);
  const double py = kAlpha * kB * std::cos(s1) - kBeta * kD * std::sin(s2);
  const double lap_phi = -kAlpha * (kA * kA + kB * kB) * std::sin(s1) -
                         kBeta * (kC * kC + kD * kD) * std::cos(s2);
  return -u * (px * px + py * py + lap_phi);
}

}  // namespace manufactured
}  // namespace cdglab
