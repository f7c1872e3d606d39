#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cdglab/linalg.hpp"
#include "cdglab/mesh.hpp"
#include "cdglab/problem.hpp"

namespace cdglab {

// One experiment cell: scheme, switch, degree, grid, penalties.
struct RunSpec {
  Scheme scheme = Scheme::CDG;
  SwitchStrategy strategy = SwitchStrategy::Consistent;
  int p = 1;
  int n = 2;
  double c11_interior = 0.0;
  double c11_boundary = 0.0;
  double eta = 3.0;
  bool periodic = false;
  int threads = -1;  // -1: library default (worker pool; 0 = serial)
};

SchemeConfig scheme_config(const RunSpec& spec);

// View of a coefficient vector as a DG field (copies the data).
DGField field_from_vector(const Mesh& mesh, const NodalBasis& basis,
                          const Eigen::VectorXd& x, int arity = 1);

struct SolveResult {
  int dofs = 0;
  double l2 = 0.0;       // ||u - u_h||_0
  double h1 = 0.0;       // |u - u_h|_1 (broken)
  double flux_l2 = 0.0;  // ||kappa grad u - sigma_h||_0, reconstructed flux
  double residual = 0.0;
  std::vector<std::string> warnings;
};

// Solves the oscillatory reference problem (kappa = 1, Dirichlet data from
// the exact solution on the whole boundary) and reports errors.
SolveResult run_manufactured_solve(const RunSpec& spec);

// Solves with polynomial data of total degree min(p, 6); the discrete space
// contains the solution, so the L2 error is a pure consistency/roundoff
// check (expected <= 1e-9).
double run_poly_exact_error(const RunSpec& spec);

// Nullspace census of the operator on the fully periodic grid with zero
// jump penalty (spec.n, spec.periodic forced true, c11 forced 0).
NullspaceInfo run_nullspace(const RunSpec& spec);

// (h/p)^2 |lambda_max| of M^{-1} A on the Dirichlet problem.
double run_scaled_spectral_radius(const RunSpec& spec);

}  // namespace cdglab
