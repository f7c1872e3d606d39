#include "cdglab/linalg.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <random>
#include <vector>

#include "cdglab/basis.hpp"
#include "cdglab/quadrature.hpp"

namespace cdglab {

namespace {

Eigen::SparseMatrix<double> to_sparse(const BlockSparseMatrix& a) {
  const int T = a.num_blocks();
  const int S = a.block_size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(std::size_t(a.stored_blocks()) * S * S);
  for (int e = 0; e < T; ++e) {
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < S; ++j)
        if (a.diag(e)(i, j) != 0.0)
          triplets.emplace_back(e * S + i, e * S + j, a.diag(e)(i, j));
    for (const auto& [col, block] : a.row_blocks(e))
      for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
          if (block(i, j) != 0.0)
            triplets.emplace_back(e * S + i, col * S + j, block(i, j));
  }
  Eigen::SparseMatrix<double> sp(a.rows(), a.rows());
  sp.setFromTriplets(triplets.begin(), triplets.end());
  return sp;
}

}  // namespace

Eigen::VectorXd solve_spd(const BlockSparseMatrix& a,
                          const Eigen::VectorXd& b) {
  const Eigen::SparseMatrix<double> sp = to_sparse(a);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sp);
  if (solver.info() != Eigen::Success)
    throw SolveError("sparse factorization failed", -1);

  // LDLT without pivoting completes on many indefinite matrices; a negative,
  // zero, or non-finite pivot is the failure signal for this solver.
  const Eigen::VectorXd d = solver.vectorD();
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (!(d[k] > 0.0) || !std::isfinite(d[k])) {
      const std::int64_t pivot = solver.permutationPinv().indices()(k);
      throw SolveError("non-positive pivot at row " + std::to_string(pivot),
                       pivot);
    }
  }

  Eigen::VectorXd x = solver.solve(b);
  const double norm_a = a.inf_norm();
  const double norm_b = b.norm();
  for (int refine = 0; refine < 3; ++refine) {
    const Eigen::VectorXd r = b - a.apply(x);
    if (r.norm() <= 1e-10 * (norm_a * x.norm() + norm_b)) return x;
    x += solver.solve(r);
  }
  const double res = (b - a.apply(x)).norm();
  if (res <= 1e-10 * (norm_a * x.norm() + norm_b)) return x;
  throw SolveError("solve did not reach the residual tolerance", -1);
}

NullspaceInfo nullspace_info(const BlockSparseMatrix& a, double rel_tol) {
  const Eigen::MatrixXd dense = a.to_dense();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
  const Eigen::VectorXd& sv = svd.singularValues();  // descending
  const Eigen::Index n = sv.size();
  const double cut = rel_tol * (n > 0 ? sv[0] : 0.0);
  Eigen::Index dim = 0;
  while (dim < n && sv[n - 1 - dim] <= cut) ++dim;

  NullspaceInfo info;
  info.dim = int(dim);
  if (dim == 0 || dim == n) {
    info.gap = std::numeric_limits<double>::infinity();
  } else {
    const double kept = sv[n - 1 - dim];     // smallest above the cut
    const double dropped = sv[n - dim];      // largest below the cut
    info.gap = dropped == 0.0 ? std::numeric_limits<double>::infinity()
                              : kept / dropped;
  }
  return info;
}

int nullspace_dim(const BlockSparseMatrix& a, double rel_tol) {
  return nullspace_info(a, rel_tol).dim;
}

double spectral_radius_generalized(const BlockSparseMatrix& a,
                                   const BlockDiagMatrix& m, double rel_tol,
                                   int max_iterations) {
  if (!m.factorized())
    throw std::logic_error("mass matrix must be factorized");

  // deterministic start vector
  std::mt19937 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(a.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  v /= std::sqrt(v.dot(m.apply(v)));

  double estimate = 0.0;
  int consecutive = 0;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const Eigen::VectorXd y = a.apply(v);
    const double rayleigh = v.dot(y);  // v is M-normalized
    const Eigen::VectorXd w = m.solve(y);
    const double wmw = w.dot(y);  // w^T M w since M w = y
    if (!(wmw > 0.0) || !std::isfinite(wmw))
      throw PowerIterationError("iteration vector collapsed", rayleigh, iter);
    v = w / std::sqrt(wmw);

    if (iter > 1 &&
        std::abs(rayleigh - estimate) <= rel_tol * std::abs(rayleigh)) {
      if (++consecutive >= 3) return std::abs(rayleigh);
    } else {
      consecutive = 0;
    }
    estimate = rayleigh;
  }
  throw PowerIterationError("power iteration did not converge", estimate,
                            max_iterations);
}

BlockDiagMatrix mass_matrix(const Mesh& mesh, const NodalBasis& basis) {
  const int S = basis.size();
  const TriangleRule vol = triangle_quadrature(2 * basis.p());
  const RefEval ev = basis.eval(vol.points, false);
  BlockDiagMatrix m(mesh.num_elements(), S);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    Eigen::MatrixXd& block = m.block(e);
    for (std::size_t q = 0; q < vol.points.size(); ++q)
      block += (vol.weights[q] * geom.det) * ev.values.col(q) *
               ev.values.col(q).transpose();
  }
  m.factorize();
  return m;
}

}  // namespace cdglab
