#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cdglab/basis.hpp"
#include "cdglab/block_matrix.hpp"
#include "cdglab/mesh.hpp"
#include "cdglab/problem.hpp"

namespace cdglab {

// Quadrature degree used for error integrals; comfortably above the
// assembly degree so the reported norms are quadrature-converged.
int error_quadrature_degree(int p);

// Broken L2 norm of u_h - u_exact over the mesh.
double l2_error(const DGField& u_h, const Mesh& mesh, const NodalBasis& basis,
                const ScalarFn& u_exact);

// Broken H1 seminorm of the error: sqrt(sum_K |grad u_h - grad u|^2).
double h1_seminorm_error(const DGField& u_h, const Mesh& mesh,
                         const NodalBasis& basis,
                         const VectorFn& u_exact_gradient);

// Broken L2 norm of a vector-valued field error (e.g. reconstructed flux
// against the exact flux).  Requires field.arity == 2.
double l2_vector_error(const DGField& field, const Mesh& mesh,
                       const NodalBasis& basis, const VectorFn& exact);

// Distance from u to the discrete space: the L2 norm of u - P_h u with P_h
// the elementwise L2 projection.  No discrete solution can have a smaller
// L2 error on the same mesh, so this is the floor any solver result is
// measured against.
double l2_best_approximation_error(const Mesh& mesh, const NodalBasis& basis,
                                   const ScalarFn& u_exact);

// log(e1/e2) / log(h1/h2); empty when an error is zero/negative or the mesh
// sizes coincide.
std::optional<double> convergence_rate(double e1, double h1, double e2,
                                       double h2);

// Closed-form storage requirements per interior simplex element.
struct MemoryCount {
  int d = 0;
  int p = 0;
  std::int64_t s = 0;       // dofs per element, C(p+d, d)
  std::int64_t se = 0;      // dofs per face, C(p+d-1, d-1)
  std::int64_t alpha = 0;   // nonlocal neighbor count of the double-sum scheme
  std::int64_t m_cdg = 0;   // S^2 + (d+1) Se S
  std::int64_t m_ldg = 0;   // m_cdg + alpha Se^2
  std::int64_t m_br2 = 0;   // S^2 + (d+1)(2S - Se) Se
};

// Exact integer evaluation; d in {1,2,3}, p >= 1, alpha >= 0.
MemoryCount memory_counts(int d, int p, std::int64_t alpha);

// Structural-nonzero census of a coupling pattern, split into interior
// elements (no boundary face; comparable to the closed-form counts) and
// boundary elements.
struct SparsityCensus {
  std::vector<std::int64_t> per_element;  // nonzeros in each element's rows
  std::vector<bool> interior;             // no face on the domain boundary
  std::int64_t total = 0;
  int interior_elements = 0;
  int boundary_elements = 0;
  std::int64_t interior_min = 0;
  std::int64_t interior_max = 0;
  double interior_mean = 0.0;
  // (interior_mean - S^2 - 3 Se S) / Se^2: the empirical nonlocal neighbor
  // count; ~0 for the compact scheme, ~1 for the double-sum scheme on these
  // meshes.
  double alpha_empirical = 0.0;
};

SparsityCensus sparsity_census(const BlockSparseMatrix& pattern,
                               const Mesh& mesh, const NodalBasis& basis);

// One report row; the CSV schema is fixed:
//   scheme,switch,p,n,c11,eta,metric,value,rate,status
struct ReportRow {
  std::string scheme;           // empty when not applicable
  std::string switch_strategy;  // empty when not applicable
  std::optional<int> p;
  std::optional<int> n;
  std::optional<double> c11;
  std::optional<double> eta;
  std::string metric;
  std::optional<double> value;
  std::optional<double> rate;
  std::string status = "ok";
};

// Deterministic writers: identical rows produce byte-identical output.
// Values carry 17 significant digits; rates are rounded to 1 decimal.
void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
void write_json(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace cdglab
