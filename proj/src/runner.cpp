#include "cdglab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cdglab/analysis.hpp"
#include "cdglab/assembly.hpp"
#include "cdglab/basis.hpp"
#include "cdglab/manufactured.hpp"

namespace cdglab {

SchemeConfig scheme_config(const RunSpec& spec) {
  SchemeConfig cfg;
  cfg.scheme = spec.scheme;
  cfg.switch_strategy = spec.strategy;
  cfg.c11_interior = spec.c11_interior;
  cfg.c11_boundary = spec.c11_boundary;
  cfg.eta = spec.eta;
  return cfg;
}

DGField field_from_vector(const Mesh& mesh, const NodalBasis& basis,
                          const Eigen::VectorXd& x, int arity) {
  const std::int64_t expected =
      std::int64_t(mesh.num_elements()) * basis.size() * arity;
  if (x.size() != expected)
    throw std::invalid_argument("coefficient vector has the wrong length");
  DGField f;
  f.arity = arity;
  f.num_elements = mesh.num_elements();
  f.block_size = basis.size();
  f.coeff.assign(x.data(), x.data() + x.size());
  return f;
}

namespace {

int resolve_threads(int threads) {
  return threads < 0 ? default_threads() : threads;
}

struct SolvedCell {
  Mesh mesh;
  NodalBasis basis;
  SwitchAssignment sw;
  DGField u_h;
  double residual = 0.0;
  std::vector<std::string> warnings;
};

SolvedCell solve_cell(const RunSpec& spec, const ProblemSpec& prob) {
  if (spec.n < 1) throw std::invalid_argument("grid parameter must be >= 1");
  SolvedCell cell{build_structured_mesh(spec.n, spec.periodic),
                  NodalBasis(spec.p),
                  {},
                  {},
                  0.0,
                  {}};
  cell.sw = assign_switches(cell.mesh, spec.strategy);
  AssembledSystem sys = assemble(cell.mesh, cell.basis, cell.sw, prob,
                                 scheme_config(spec),
                                 resolve_threads(spec.threads));
  const Eigen::VectorXd x = solve_spd(sys.A, sys.b);
  cell.residual = (sys.b - sys.A.apply(x)).norm();
  cell.u_h = field_from_vector(cell.mesh, cell.basis, x);
  cell.warnings = std::move(sys.warnings);
  return cell;
}

}  // namespace

SolveResult run_manufactured_solve(const RunSpec& spec) {
  ProblemSpec prob;
  prob.f = manufactured::eval_f;
  prob.g_dirichlet = manufactured::eval_u;

  SolvedCell cell = solve_cell(spec, prob);
  SolveResult result;
  result.dofs = cell.mesh.num_elements() * cell.basis.size();
  result.residual = cell.residual;
  result.warnings = std::move(cell.warnings);
  result.l2 = l2_error(cell.u_h, cell.mesh, cell.basis, manufactured::eval_u);
  result.h1 = h1_seminorm_error(cell.u_h, cell.mesh, cell.basis,
                                manufactured::eval_grad_u);
  const DGField sigma =
      reconstruct_flux(cell.u_h, cell.mesh, cell.basis, cell.sw, prob,
                       scheme_config(spec));
  result.flux_l2 = l2_vector_error(sigma, cell.mesh, cell.basis,
                                   manufactured::eval_grad_u);
  return result;
}

double run_poly_exact_error(const RunSpec& spec) {
  const int q = std::min(spec.p, 6);
  // u = (x + 0.7 y - 0.3)^q: in the discrete space for every p >= q.
  const auto base = [](double x, double y) { return x + 0.7 * y - 0.3; };
  const ScalarFn u = [base, q](double x, double y) {
    return std::pow(base(x, y), q);
  };
  ProblemSpec prob;
  prob.g_dirichlet = u;
  prob.f = [base, q](double x, double y) {
    if (q < 2) return 0.0;
    return -double(q) * double(q - 1) * (1.0 + 0.49) *
           std::pow(base(x, y), q - 2);
  };

  SolvedCell cell = solve_cell(spec, prob);
  return l2_error(cell.u_h, cell.mesh, cell.basis, u);
}

NullspaceInfo run_nullspace(const RunSpec& spec) {
  RunSpec periodic_spec = spec;
  periodic_spec.periodic = true;
  periodic_spec.c11_interior = 0.0;
  periodic_spec.c11_boundary = 0.0;

  const Mesh mesh = build_structured_mesh(periodic_spec.n, true);
  const NodalBasis basis(periodic_spec.p);
  const SwitchAssignment sw = assign_switches(mesh, periodic_spec.strategy);
  ProblemSpec prob;  // operator only; data irrelevant
  const AssembledSystem sys =
      assemble(mesh, basis, sw, prob, scheme_config(periodic_spec),
               resolve_threads(periodic_spec.threads));
  return nullspace_info(sys.A);
}

double run_scaled_spectral_radius(const RunSpec& spec) {
  if (spec.periodic)
    throw std::invalid_argument(
        "spectral study runs on the Dirichlet problem");
  const Mesh mesh = build_structured_mesh(spec.n, false);
  const NodalBasis basis(spec.p);
  const SwitchAssignment sw = assign_switches(mesh, spec.strategy);
  ProblemSpec prob;  // operator only; data irrelevant
  const AssembledSystem sys = assemble(mesh, basis, sw, prob,
                                       scheme_config(spec),
                                       resolve_threads(spec.threads));
  const BlockDiagMatrix m = mass_matrix(mesh, basis);
  const double rho = spectral_radius_generalized(sys.A, m);
  const double h_over_p = 1.0 / (double(spec.n) * spec.p);
  return h_over_p * h_over_p * rho;
}

}  // namespace cdglab
