#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "cdglab/block_matrix.hpp"
#include "cdglab/mesh.hpp"

namespace cdglab {

class NodalBasis;

// Factorization failure (zero or negative pivot, i.e. the matrix is
// singular or indefinite).  `pivot` is the offending row/column in the
// original ordering, or -1 when it cannot be attributed.
struct SolveError : std::runtime_error {
  std::int64_t pivot;
  SolveError(const std::string& msg, std::int64_t pivot_index)
      : std::runtime_error(msg), pivot(pivot_index) {}
};

// Sparse LDLT solve with iterative refinement.  Guarantees
//   ||A x - b||_2 <= 1e-10 (||A||_inf ||x||_2 + ||b||_2)
// or throws SolveError.
Eigen::VectorXd solve_spd(const BlockSparseMatrix& a, const Eigen::VectorXd& b);

struct NullspaceInfo {
  int dim = 0;
  // smallest kept singular value / largest dropped one; infinity when the
  // split is clean (dim zero, dim full, or exact zeros below the cut)
  double gap = 0.0;
};

// Dense singular value census: dim = #{sigma_i <= rel_tol * sigma_max}.
NullspaceInfo nullspace_info(const BlockSparseMatrix& a, double rel_tol = 1e-8);
int nullspace_dim(const BlockSparseMatrix& a, double rel_tol = 1e-8);

struct PowerIterationError : std::runtime_error {
  double last_estimate;
  int iterations;
  PowerIterationError(const std::string& msg, double estimate, int iters)
      : std::runtime_error(msg), last_estimate(estimate), iterations(iters) {}
};

// |lambda_max| of the generalized problem A v = lambda M v via power
// iteration on M^{-1} A with Rayleigh-quotient estimates; converged when the
// estimate changes by <= rel_tol relatively on three consecutive iterations.
// M must be factorized.  Throws PowerIterationError (carrying the last
// estimate) if the cap is hit.
double spectral_radius_generalized(const BlockSparseMatrix& a,
                                   const BlockDiagMatrix& m,
                                   double rel_tol = 1e-8,
                                   int max_iterations = 25000);

// Block-diagonal mass matrix of the DG space (plain, kappa-free), returned
// factorized.
BlockDiagMatrix mass_matrix(const Mesh& mesh, const NodalBasis& basis);

}  // namespace cdglab
