#include "cdglab/quadrature.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace cdglab {

namespace {

// Golub-Welsch: nodes/weights of the Gauss rule for a weight function whose
// orthogonal polynomials have recurrence coefficients (diag a_k, offdiag b_k),
// with mu0 = integral of the weight function.
void golub_welsch(const std::vector<double>& a, const std::vector<double>& b,
                  double mu0, std::vector<double>& x, std::vector<double>& w) {
  const int q = static_cast<int>(a.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < q; ++i) jac(i, i) = a[i];
  for (int i = 0; i + 1 < q; ++i) jac(i, i + 1) = jac(i + 1, i) = b[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  x.resize(q);
  w.resize(q);
  for (int i = 0; i < q; ++i) {
    x[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    w[i] = mu0 * v * v;
  }
}

// Gauss-Jacobi rule on [-1,1] for weight (1-t): absorbs the conical-product
// Jacobian of the triangle collapse.
void gauss_jacobi_10(int q, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> a(q), b(q > 1 ? q - 1 : 0);
  for (int k = 0; k < q; ++k)
    a[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
  for (int k = 1; k < q; ++k)
    b[k - 1] = std::sqrt(k * (k + 1.0)) / (2.0 * k + 1.0);
  golub_welsch(a, b, 2.0, x, w);
}

int points_for_degree(int min_degree) {
  if (min_degree < 0) throw std::invalid_argument("quadrature degree < 0");
  return min_degree / 2 + 1;  // q-point Gauss is exact to degree 2q-1
}

}  // namespace

void gauss_legendre(int q, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> a(q, 0.0), b(q > 1 ? q - 1 : 0);
  for (int k = 1; k < q; ++k) b[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  golub_welsch(a, b, 2.0, x, w);
}

TriangleRule triangle_quadrature(int min_degree) {
  const int q = points_for_degree(min_degree);
  std::vector<double> xg, wg, xj, wj;
  gauss_legendre(q, xg, wg);
  gauss_jacobi_10(q, xj, wj);
  TriangleRule rule;
  rule.exactness = 2 * q - 1;
  rule.points.reserve(q * q);
  rule.weights.reserve(q * q);
  // x = xi*(1-y), y = y: dx dy = (1-y) dxi dy; the (1-y) factor lives in the
  // Gauss-Jacobi weight.
  for (int jy = 0; jy < q; ++jy) {
    const double y = 0.5 * (1.0 + xj[jy]);
    const double wy = 0.25 * wj[jy];
    for (int ix = 0; ix < q; ++ix) {
      const double xi = 0.5 * (1.0 + xg[ix]);
      const double wx = 0.5 * wg[ix];
      rule.points.push_back({xi * (1.0 - y), y});
      rule.weights.push_back(wx * wy);
    }
  }
  return rule;
}

FaceRule face_quadrature(int min_degree) {
  const int q = points_for_degree(min_degree);
  std::vector<double> xg, wg;
  gauss_legendre(q, xg, wg);
  FaceRule rule;
  rule.exactness = 2 * q - 1;
  rule.points.resize(q);
  rule.weights.resize(q);
  for (int i = 0; i < q; ++i) {
    rule.points[i] = 0.5 * (1.0 + xg[i]);
    rule.weights[i] = 0.5 * wg[i];
  }
  return rule;
}

}  // namespace cdglab
