#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cdglab/basis.hpp"
#include "cdglab/block_matrix.hpp"
#include "cdglab/mesh.hpp"
#include "cdglab/problem.hpp"
#include "cdglab/quadrature.hpp"

namespace cdglab {

struct AssembledSystem {
  BlockSparseMatrix A;
  Eigen::VectorXd b;
  // Configuration fields the scheme does not consume (e.g. penalty values
  // with BR2) are ignored and reported here rather than raising an error.
  std::vector<std::string> warnings;
};

// Number of worker threads for assembly and matrix products: 0 selects the
// single-threaded reference path.  Every thread count produces bitwise
// identical results: tasks are pure functions of the immutable inputs and
// their outputs are merged in a fixed order.
int default_threads();  // reads CDGLAB_THREADS, "0" = serial

// Quadrature orders used for assembly and error integrals (generous so the
// oscillatory data of the test problem is integrated accurately even on the
// coarsest meshes).
int assembly_quadrature_degree(int p);

AssembledSystem assemble(const Mesh& mesh, const NodalBasis& basis,
                         const SwitchAssignment& sw, const ProblemSpec& problem,
                         const SchemeConfig& config, int threads = 0);

// Facewise lifting operators (kappa-free).  Each returns a vector field
// supported only on the element(s) adjacent to the face, defined by
//   r:   integral_K r(phi) . tau  = -integral_e phi . {tau}     (interior e)
//   l:   integral_K l(q) . tau    = -integral_e q [tau]         (interior e)
//   r_D: integral_K rD(q) . tau   = -integral_e q tau . n       (Dirichlet e)
// for all element vector polynomials tau.  Data is sampled at the points of
// the given face rule (parameter t in [0,1] along the face).
DGField lift_r_face(const Mesh& mesh, const NodalBasis& basis,
                    int interior_face, const std::vector<Vec2>& phi_at_qp,
                    const FaceRule& rule);
DGField lift_l_face(const Mesh& mesh, const NodalBasis& basis,
                    int interior_face, const std::vector<double>& q_at_qp,
                    const FaceRule& rule);
DGField lift_rD_face(const Mesh& mesh, const NodalBasis& basis,
                     int dirichlet_boundary_face,
                     const std::vector<double>& q_at_qp, const FaceRule& rule);

// Flux reconstruction sigma_h = kappa grad u_h + sigma_bar with
// sigma_bar = kappa ( r([u_h]) + l(C12 . [u_h]) - r_D(g_D - u_h) ),
// returned as a nodal vector field.
DGField reconstruct_flux(const DGField& u_h, const Mesh& mesh,
                         const NodalBasis& basis, const SwitchAssignment& sw,
                         const ProblemSpec& problem,
                         const SchemeConfig& config);

}  // namespace cdglab
